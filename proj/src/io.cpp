#include "equivar/io.hpp"

#include "equivar/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace equivar {

namespace {

using json = nlohmann::json;

json complex_array(const std::vector<cd>& values) {
    json a = json::array();
    for (const cd& v : values) a.push_back({v.real(), v.imag()});
    return a;
}

std::vector<cd> parse_complex_array(const json& a, std::size_t expected) {
    if (!a.is_array() || a.size() != expected)
        throw FormatError("expected " + std::to_string(expected) + " complex coefficients");
    std::vector<cd> out;
    out.reserve(expected);
    for (const auto& v : a) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw FormatError("coefficient must be [re, im]");
        out.emplace_back(v[0].get<double>(), v[1].get<double>());
    }
    return out;
}

json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("invalid JSON: ") + e.what());
    }
}

int get_int(const json& j, const char* key, int lo = 0) {
    if (!j.contains(key) || !j[key].is_number_integer()) throw FormatError(std::string("missing integer field ") + key);
    const int v = j[key].get<int>();
    if (v < lo) throw FormatError(std::string("field out of range: ") + key);
    return v;
}

void expect_domain(const json& j, const char* domain) {
    if (!j.contains("domain") || j["domain"] != domain) throw FormatError(std::string("expected domain ") + domain);
}

std::string dump(const json& j) {
    // nlohmann writes doubles with max_digits10, so the round trip is exact.
    return j.dump() + "\n";
}

// Splits a CSV line into numbers; throws on anything else.
std::vector<double> csv_numbers(const std::string& line) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception&) {
            throw FormatError("not a number: '" + cell + "'");
        }
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw FormatError("not a number: '" + cell + "'");
        out.push_back(v);
    }
    return out;
}

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

int as_index(double v, int hi) {
    if (v != std::floor(v) || v < 0 || v >= hi) throw FormatError("index out of range");
    return static_cast<int>(v);
}

}  // namespace

void write_s2_samples_csv(const S2Samples& s, std::ostream& out) {
    out.precision(17);
    out << "channel,j,k,re,im\n";
    const int n = 2 * s.bandlimit;
    for (int c = 0; c < s.channels; ++c)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const cd v = s.at(c, j, k);
                out << c << ',' << j << ',' << k << ',' << v.real() << ',' << v.imag() << '\n';
            }
}

S2Samples read_s2_samples_csv(std::istream& in, int L) {
    if (L < 1) throw FormatError("bandlimit must be positive");
    const int n = 2 * L;
    std::vector<std::array<double, 5>> rows;
    std::string line;
    bool header = true;
    int channels = 0;
    while (std::getline(in, line)) {
        if (blank(line)) continue;
        if (header) {
            header = false;
            if (line.rfind("channel,j,k,re,im", 0) == 0) continue;
        }
        const auto v = csv_numbers(line);
        if (v.size() != 5) throw FormatError("expected channel,j,k,re,im");
        rows.push_back({v[0], v[1], v[2], v[3], v[4]});
        channels = std::max(channels, as_index(v[0], 1 << 20) + 1);
    }
    if (rows.size() != static_cast<std::size_t>(channels) * n * n)
        throw FormatError("sample count does not match a complete grid of bandlimit " + std::to_string(L));
    auto s = S2Samples::zeros(L, channels);
    std::vector<char> seen(s.values.size(), 0);
    for (const auto& r : rows) {
        const int c = as_index(r[0], channels), j = as_index(r[1], n), k = as_index(r[2], n);
        const std::size_t at = (static_cast<std::size_t>(c) * n + j) * n + k;
        if (seen[at]++) throw FormatError("duplicate sample");
        s.values[at] = {r[3], r[4]};
    }
    return s;
}

void write_so3_samples_csv(const SO3Samples& s, std::ostream& out) {
    out.precision(17);
    out << "channel,b,a,c,re,im\n";
    const int n = 2 * s.bandlimit;
    for (int ch = 0; ch < s.channels; ++ch)
        for (int b = 0; b < n; ++b)
            for (int a = 0; a < n; ++a)
                for (int c = 0; c < n; ++c) {
                    const cd v = s.at(ch, b, a, c);
                    out << ch << ',' << b << ',' << a << ',' << c << ',' << v.real() << ',' << v.imag() << '\n';
                }
}

SO3Samples read_so3_samples_csv(std::istream& in, int L) {
    if (L < 1) throw FormatError("bandlimit must be positive");
    const int n = 2 * L;
    std::vector<std::array<double, 6>> rows;
    std::string line;
    bool header = true;
    int channels = 0;
    while (std::getline(in, line)) {
        if (blank(line)) continue;
        if (header) {
            header = false;
            if (line.rfind("channel,b,a,c,re,im", 0) == 0) continue;
        }
        const auto v = csv_numbers(line);
        if (v.size() != 6) throw FormatError("expected channel,b,a,c,re,im");
        rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
        channels = std::max(channels, as_index(v[0], 1 << 20) + 1);
    }
    if (rows.size() != static_cast<std::size_t>(channels) * n * n * n)
        throw FormatError("sample count does not match a complete grid of bandlimit " + std::to_string(L));
    auto s = SO3Samples::zeros(L, channels);
    std::vector<char> seen(s.values.size(), 0);
    for (const auto& r : rows) {
        const int ch = as_index(r[0], channels), b = as_index(r[1], n), a = as_index(r[2], n), c = as_index(r[3], n);
        const std::size_t at = ((static_cast<std::size_t>(ch) * n + b) * n + a) * n + c;
        if (seen[at]++) throw FormatError("duplicate sample");
        s.values[at] = {r[4], r[5]};
    }
    return s;
}

std::string s2_coeffs_to_json(const SpectralS2Signal& s) {
    json j{{"domain", "s2"}, {"bandlimit", s.bandlimit}, {"channels", s.channels}, {"real_valued", s.real_valued}};
    j["coeffs"] = complex_array(s.coeffs);
    return dump(j);
}

std::string so3_coeffs_to_json(const SpectralSO3Signal& s) {
    json j{{"domain", "so3"}, {"bandlimit", s.bandlimit}, {"channels", s.channels}, {"real_valued", s.real_valued}};
    j["coeffs"] = complex_array(s.coeffs);
    return dump(j);
}

SpectralS2Signal s2_coeffs_from_json(const std::string& text) {
    const json j = parse(text);
    expect_domain(j, "s2");
    auto s = SpectralS2Signal::zeros(get_int(j, "bandlimit", 1), get_int(j, "channels", 1));
    s.real_valued = j.value("real_valued", false);
    s.coeffs = parse_complex_array(j["coeffs"], s.coeffs.size());
    return s;
}

SpectralSO3Signal so3_coeffs_from_json(const std::string& text) {
    const json j = parse(text);
    expect_domain(j, "so3");
    auto s = SpectralSO3Signal::zeros(get_int(j, "bandlimit", 1), get_int(j, "channels", 1));
    s.real_valued = j.value("real_valued", false);
    s.coeffs = parse_complex_array(j["coeffs"], s.coeffs.size());
    return s;
}

std::string kernel_s2_to_json(const KernelS2& k) {
    json j{{"domain", "s2"}, {"bandlimit", k.bandlimit}, {"out_channels", k.out_channels}, {"in_channels", k.in_channels}};
    j["coeffs"] = complex_array(k.coeffs);
    return dump(j);
}

std::string kernel_so3_to_json(const KernelSO3& k) {
    json j{{"domain", "so3"}, {"bandlimit", k.bandlimit}, {"out_channels", k.out_channels}, {"in_channels", k.in_channels}};
    j["coeffs"] = complex_array(k.coeffs);
    return dump(j);
}

KernelS2 kernel_s2_from_json(const std::string& text) {
    const json j = parse(text);
    expect_domain(j, "s2");
    auto k = KernelS2::zeros(get_int(j, "bandlimit", 1), get_int(j, "out_channels", 1), get_int(j, "in_channels", 1));
    k.coeffs = parse_complex_array(j["coeffs"], k.coeffs.size());
    return k;
}

KernelSO3 kernel_so3_from_json(const std::string& text) {
    const json j = parse(text);
    expect_domain(j, "so3");
    auto k = KernelSO3::zeros(get_int(j, "bandlimit", 1), get_int(j, "out_channels", 1), get_int(j, "in_channels", 1));
    k.coeffs = parse_complex_array(j["coeffs"], k.coeffs.size());
    return k;
}

ImageZ2 read_pnm(std::istream& in) {
    // Tokens with '#' comments stripped.
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::stringstream ss(line);
        std::string t;
        while (ss >> t) tokens.push_back(t);
    }
    if (tokens.size() < 4) throw FormatError("truncated PNM header");
    int channels;
    if (tokens[0] == "P2")
        channels = 1;
    else if (tokens[0] == "P3")
        channels = 3;
    else
        throw FormatError("only ASCII P2/P3 images are supported");
    auto number = [&](std::size_t i) {
        try {
            std::size_t used = 0;
            const long v = std::stol(tokens[i], &used);
            if (used != tokens[i].size() || v < 0) throw FormatError("bad PNM value");
            return v;
        } catch (const std::logic_error&) {
            throw FormatError("bad PNM value: " + tokens[i]);
        }
    };
    const long w = number(1), h = number(2), maxval = number(3);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) throw FormatError("bad PNM header");
    const std::size_t count = static_cast<std::size_t>(w) * h * channels;
    if (tokens.size() != 4 + count) throw FormatError("PNM pixel count mismatch");
    auto img = ImageZ2::zeros(static_cast<int>(w), static_cast<int>(h), channels);
    for (std::size_t i = 0; i < count; ++i) {
        const long v = number(4 + i);
        if (v > maxval) throw FormatError("PNM value above maxval");
        img.values[i] = static_cast<double>(v) / maxval;
    }
    return img;
}

void write_pnm(const ImageZ2& image, std::ostream& out, int maxval) {
    if (image.channels != 1 && image.channels != 3) throw ShapeMismatch("PNM needs 1 or 3 channels");
    out << (image.channels == 1 ? "P2" : "P3") << '\n' << image.width << ' ' << image.height << '\n' << maxval << '\n';
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < image.channels; ++c) {
                const double v = std::clamp(image.at(x, y, c), 0.0, 1.0);
                out << (x || c ? " " : "") << std::lround(v * maxval);
            }
        out << '\n';
    }
}

ImageZ2 read_image_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (blank(line)) continue;
        rows.push_back(csv_numbers(line));
        if (rows.back().size() != rows.front().size()) throw FormatError("ragged CSV image");
    }
    if (rows.empty() || rows.front().empty()) throw FormatError("empty CSV image");
    auto img = ImageZ2::zeros(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()), 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) img.at(x, y, 0) = rows[y][x];
    return img;
}

void write_image_csv(const ImageZ2& image, std::ostream& out) {
    if (image.channels != 1) throw ShapeMismatch("CSV images have one channel");
    out.precision(17);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) out << (x ? "," : "") << image.at(x, y, 0);
        out << '\n';
    }
}

void write_detections(const DetectionField& f, std::ostream& out) {
    out << json{{"width", f.width}, {"height", f.height}, {"rotating", f.rotating}, {"classes", f.classes}}.dump()
        << '\n';
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) out << json{{"x", x}, {"y", y}, {"record", f.at(x, y)}}.dump() << '\n';
}

DetectionField read_detections(std::istream& in) {
    std::string line;
    json header;
    while (std::getline(in, line) && blank(line)) {
    }
    header = parse(line);
    DetectionField f;
    f.width = get_int(header, "width", 1);
    f.height = get_int(header, "height", 1);
    f.classes = get_int(header, "classes", 0);
    if (!header.contains("rotating") || !header["rotating"].is_boolean()) throw FormatError("missing field rotating");
    f.rotating = header["rotating"].get<bool>();
    const std::size_t len = static_cast<std::size_t>(f.classes) + (f.rotating ? 6 : 4);
    f.records.assign(static_cast<std::size_t>(f.width) * f.height, {});
    std::vector<char> seen(f.records.size(), 0);
    while (std::getline(in, line)) {
        if (blank(line)) continue;
        const json j = parse(line);
        const int x = get_int(j, "x"), y = get_int(j, "y");
        if (x >= f.width || y >= f.height) throw FormatError("detection outside the field");
        if (!j.contains("record") || !j["record"].is_array() || j["record"].size() != len)
            throw FormatError("record length must be " + std::to_string(len));
        std::vector<double> rec;
        for (const auto& v : j["record"]) {
            if (!v.is_number()) throw FormatError("record values must be numbers");
            rec.push_back(v.get<double>());
        }
        const std::size_t at = static_cast<std::size_t>(y) * f.width + x;
        if (seen[at]++) throw FormatError("duplicate detection pixel");
        f.records[at] = std::move(rec);
    }
    if (std::count(seen.begin(), seen.end(), 1) != static_cast<long>(seen.size()))
        throw FormatError("missing detection pixels");
    return f;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace equivar
