#pragma once

#include "equivar/grids.hpp"
#include "equivar/repr.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace equivar {

// Kernel coefficients with Hom(V1, V2) values, index (out, in, l, m).
struct KernelS2 {
    int bandlimit = 0;
    int out_channels = 0;
    int in_channels = 0;
    std::vector<cd> coeffs;

    static KernelS2 zeros(int L, int out, int in);
    cd& at(int o, int i, int l, int m) {
        return coeffs[(static_cast<std::size_t>(o) * in_channels + i) * s2_size(bandlimit) + s2_index(l, m)];
    }
    cd at(int o, int i, int l, int m) const {
        return coeffs[(static_cast<std::size_t>(o) * in_channels + i) * s2_size(bandlimit) + s2_index(l, m)];
    }
    // Same coefficients viewed as a signal with out*in channels.
    SpectralS2Signal as_signal() const;
};

// Index (out, in, l, m, n).
struct KernelSO3 {
    int bandlimit = 0;
    int out_channels = 0;
    int in_channels = 0;
    std::vector<cd> coeffs;

    static KernelSO3 zeros(int L, int out, int in);
    cd& at(int o, int i, int l, int m, int n) {
        return coeffs[(static_cast<std::size_t>(o) * in_channels + i) * so3_size(bandlimit) + so3_index(l, m, n)];
    }
    cd at(int o, int i, int l, int m, int n) const {
        return coeffs[(static_cast<std::size_t>(o) * in_channels + i) * so3_size(bandlimit) + so3_index(l, m, n)];
    }
    SpectralSO3Signal as_signal() const;
};

// A finite-dimensional representation of SO(3) given pointwise, with the
// largest irreducible degree it contains.
struct Representation {
    int dim = 1;
    int max_degree = 0;
    bool real_valued = true;
    std::function<CMatrix(const EulerZYZ&)> matrix;

    static Representation trivial(int dim = 1);
    // Direct sum of wigner_D blocks; real_basis gives the real orthogonal form.
    static Representation irreps(const FeatureType& t, bool real_basis);
    // Rotation matrices acting on Cartesian 3-vectors.
    static Representation fundamental();
};

// Fourier coefficients of every matrix element of rho(R), channel s*dim + t
// holding rho_{st}.
struct RepSpectral {
    int dim = 1;
    int bandlimit = 1;
    bool real_valued = true;
    SpectralSO3Signal coeffs;

    static RepSpectral from(const Representation& rho);
    const cd* element(int s, int t) const {
        return coeffs.coeffs.data() + static_cast<std::size_t>(s * dim + t) * so3_size(bandlimit);
    }
};

// Spectral product of two functions on SO(3): coefficients of a(R) b(R)
// truncated below out_bandlimit, accumulated into c with a scale.
void so3_product_accumulate(const cd* a, int La, const cd* b, int Lb, cd* c, int Lc, const CGTable& cg,
                            cd scale = 1.0);

// Quadrature oracles. Each returns values laid out (rotation, out channel).
std::vector<cd> s2_conv_scalar_spatial(const KernelS2& kappa, const S2Samples& f, const S2Grid& grid,
                                       const std::vector<EulerZYZ>& rotations);
std::vector<cd> so3_conv_scalar_spatial(const KernelSO3& kappa, const SO3Samples& f, const SO3Grid& grid,
                                        const std::vector<EulerZYZ>& rotations);
std::vector<cd> s2_conv_general_spatial(const Representation& rho1, const Representation& rho2, const KernelS2& kappa,
                                        const S2Samples& f, const S2Grid& grid,
                                        const std::vector<EulerZYZ>& rotations);
std::vector<cd> so3_conv_general_spatial(const Representation& rho1, const Representation& rho2,
                                         const KernelSO3& kappa, const SO3Samples& f, const SO3Grid& grid,
                                         const std::vector<EulerZYZ>& rotations);

// Fourier-domain convolutions. The sphere variants pair kernel coefficients
// with conj(f), which is the sphere integral exactly when f is real-valued.
SpectralSO3Signal s2_conv_scalar(const KernelS2& kappa, const SpectralS2Signal& f);
SpectralSO3Signal so3_conv_scalar(const KernelSO3& kappa, const SpectralSO3Signal& f);

// General representations. rho1 must be real-valued (the inverse enters as
// conj of transposed coefficients). Output bandlimit defaults to the exact
// content min(L_kappa, L_f) + 2 (L_rho - 1) for the sphere and
// min(L_kappa, L_f + 2 (L_rho - 1)) for SO(3).
SpectralSO3Signal s2_conv_general(const RepSpectral& rho1, const RepSpectral& rho2, const KernelS2& kappa,
                                  const SpectralS2Signal& f, const CGTable& cg,
                                  std::optional<int> out_bandlimit = std::nullopt);
SpectralSO3Signal so3_conv_general(const RepSpectral& rho1, const RepSpectral& rho2, const KernelSO3& kappa,
                                   const SpectralSO3Signal& f, const CGTable& cg,
                                   std::optional<int> out_bandlimit = std::nullopt);
SpectralSO3Signal s2_conv_general(const RepSpectral& rho1, const RepSpectral& rho2, const KernelS2& kappa,
                                  const SpectralS2Signal& f);
SpectralSO3Signal so3_conv_general(const RepSpectral& rho1, const RepSpectral& rho2, const KernelSO3& kappa,
                                   const SpectralSO3Signal& f);

// Irrep-decomposed convolutions for features typed by FeatureType in the
// complex basis. No Fourier coefficients of the representations are needed.
// Valid for complex-valued inputs.
SpectralSO3Signal irrep_s2_conv(const FeatureType& out, const FeatureType& in, const KernelS2& kappa,
                                const SpectralS2Signal& f, const CGTable& cg);
SpectralSO3Signal irrep_so3_conv(const FeatureType& out, const FeatureType& in, const KernelSO3& kappa,
                                 const SpectralSO3Signal& f, const CGTable& cg);
int irrep_s2_conv_bandlimit(const FeatureType& out, const FeatureType& in, int kernel_L, int signal_L);
int irrep_so3_conv_bandlimit(const FeatureType& out, const FeatureType& in, int kernel_L, int signal_L);

// Channel mixing: out_c = sum_d U_{cd} f_d, for applying representation
// matrices or basis changes to coefficients.
SpectralS2Signal mix_channels(const CMatrix& U, const SpectralS2Signal& f);
SpectralSO3Signal mix_channels(const CMatrix& U, const SpectralSO3Signal& f);
// kappa -> A kappa B.
KernelS2 mix_kernel(const CMatrix& A, const KernelS2& k, const CMatrix& B);
KernelSO3 mix_kernel(const CMatrix& A, const KernelSO3& k, const CMatrix& B);

}  // namespace equivar
