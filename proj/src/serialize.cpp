#include "cocoa/serialize.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cocoa {

using nlohmann::json;

namespace {

json parse_json(const std::string& text, const std::string& what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw IoError("invalid JSON in " + what);
    return j;
}

double finite_number(const json& v, const std::string& what) {
    if (!v.is_number()) throw IoError(what + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw IoError(what + " must be finite");
    return d;
}

}  // namespace

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string aberration_to_json(const WavefrontAberration& a) {
    json j = json::object();
    for (const auto& [idx, coeff] : a.coeffs) j[std::to_string(idx)] = coeff;
    return j.dump(2) + "\n";
}

WavefrontAberration aberration_from_json_text(const std::string& text) {
    const json j = parse_json(text, "aberration file");
    if (!j.is_object()) throw IoError("aberration file must be a JSON object");
    WavefrontAberration a;
    for (const auto& [key, value] : j.items()) {
        std::size_t used = 0;
        int idx = 0;
        try {
            idx = std::stoi(key, &used);
        } catch (const std::exception&) {
            throw IoError("aberration key '" + key + "' is not an integer mode index");
        }
        if (used != key.size())
            throw IoError("aberration key '" + key + "' is not an integer mode index");
        from_ansi(idx);  // validates the index
        a.set(idx, finite_number(value, "coefficient of mode " + key));
    }
    return a;
}

void save_aberration(const std::string& path, const WavefrontAberration& a) {
    write_text_file(path, aberration_to_json(a));
}

WavefrontAberration load_aberration(const std::string& path) {
    return aberration_from_json_text(read_text_file(path));
}

void save_sidecar(const std::string& path, const StackSidecar& s) {
    json j;
    j["pitch"] = {{"dz", s.pitch.dz}, {"dy", s.pitch.dy}, {"dx", s.pitch.dx}};
    j["gain"] = s.gain;
    j["readout"] = s.readout;
    j["wavelength"] = s.wavelength;
    j["numerical_aperture"] = s.numerical_aperture;
    write_text_file(path, j.dump(2) + "\n");
}

StackSidecar load_sidecar(const std::string& path) {
    const json j = parse_json(read_text_file(path), path);
    StackSidecar s;
    if (j.contains("pitch")) {
        const json& p = j.at("pitch");
        s.pitch.dz = finite_number(p.at("dz"), "pitch.dz");
        s.pitch.dy = finite_number(p.at("dy"), "pitch.dy");
        s.pitch.dx = finite_number(p.at("dx"), "pitch.dx");
    }
    if (j.contains("gain")) s.gain = finite_number(j.at("gain"), "gain");
    if (j.contains("readout")) s.readout = finite_number(j.at("readout"), "readout");
    if (j.contains("wavelength")) s.wavelength = finite_number(j.at("wavelength"), "wavelength");
    if (j.contains("numerical_aperture"))
        s.numerical_aperture = finite_number(j.at("numerical_aperture"), "numerical_aperture");
    return s;
}

void save_loss_trace(const std::string& path, const std::vector<LossBreakdown>& trace) {
    std::ostringstream out;
    out << "# loss-trace v1\n";
    out << "iteration,total,ssim_term,tv_term,l1_term\n";
    out.precision(17);
    for (std::size_t i = 0; i < trace.size(); ++i)
        out << i << ',' << trace[i].total << ',' << trace[i].ssim_term << ',' << trace[i].tv_term
            << ',' << trace[i].l1_term << '\n';
    write_text_file(path, out.str());
}

std::string metrics_report_to_json(const MetricsReport& r) {
    json j = json::object();
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
    };
    put("snr", r.snr);
    put("sbr", r.sbr);
    put("pcc", r.pcc);
    put("emd", r.emd);
    put("contrast", r.contrast);
    put("rms_wavefront_error", r.rms_wavefront_error);
    if (r.psd) {
        j["radial_psd"] = {{"freq", r.psd->freq}, {"power", r.psd->power},
                           {"count", r.psd->count}};
    }
    return j.dump(2) + "\n";
}

void save_metrics_report(const std::string& path, const MetricsReport& report) {
    write_text_file(path, metrics_report_to_json(report));
}

namespace {

constexpr char kFieldMagic[4] = {'C', 'C', 'A', 'F'};
constexpr std::uint32_t kFieldVersion = 1;

json encoding_to_json(const EncodingSpec& e) {
    return json{{"n_radial", e.n_radial},
                {"n_axial", e.n_axial},
                {"radial_base", e.radial_base},
                {"radial_max", e.radial_max},
                {"axial_base", e.axial_base},
                {"axial_max", e.axial_max},
                {"spacing", e.spacing == EncodingSpec::Spacing::geometric ? "geometric" : "linear"},
                {"include_raw", e.include_raw}};
}

EncodingSpec encoding_from_json(const json& j) {
    EncodingSpec e;
    e.n_radial = j.at("n_radial").get<int>();
    e.n_axial = j.at("n_axial").get<int>();
    e.radial_base = finite_number(j.at("radial_base"), "radial_base");
    e.radial_max = finite_number(j.at("radial_max"), "radial_max");
    e.axial_base = finite_number(j.at("axial_base"), "axial_base");
    e.axial_max = finite_number(j.at("axial_max"), "axial_max");
    const std::string sp = j.at("spacing").get<std::string>();
    if (sp == "geometric")
        e.spacing = EncodingSpec::Spacing::geometric;
    else if (sp == "linear")
        e.spacing = EncodingSpec::Spacing::linear;
    else
        throw IoError("unknown encoding spacing '" + sp + "'");
    e.include_raw = j.at("include_raw").get<bool>();
    return e;
}

}  // namespace

void save_field(const std::string& path, const FieldSpec& spec,
                const std::vector<double>& params, std::uint64_t seed) {
    json hdr;
    hdr["hidden"] = spec.hidden;
    hdr["skip_layers"] = spec.skip_layers;
    hdr["output"] = spec.output == FieldSpec::Output::softplus ? "softplus" : "relu";
    hdr["encoding"] = encoding_to_json(spec.encoding);
    hdr["seed"] = seed;
    hdr["count"] = params.size();
    const std::string htext = hdr.dump();

    std::string out;
    out.append(kFieldMagic, 4);
    auto put32 = [&](std::uint32_t v) { out.append(reinterpret_cast<char*>(&v), 4); };
    put32(kFieldVersion);
    put32(static_cast<std::uint32_t>(htext.size()));
    out += htext;
    for (double d : params) {
        const float f = static_cast<float>(d);
        char buf[4];
        std::memcpy(buf, &f, 4);
        out.append(buf, 4);
    }
    write_text_file(path, out);
}

FieldBlob load_field(const std::string& path) {
    const std::string bytes = read_text_file(path);
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kFieldMagic, 4) != 0)
        throw IoError("not a field parameter blob: " + path);
    std::uint32_t version, hlen;
    std::memcpy(&version, bytes.data() + 4, 4);
    std::memcpy(&hlen, bytes.data() + 8, 4);
    if (version != kFieldVersion) throw IoError("unsupported field blob version");
    if (12 + static_cast<std::size_t>(hlen) > bytes.size()) throw IoError("truncated field blob");
    const json hdr = parse_json(bytes.substr(12, hlen), path);

    FieldBlob blob;
    blob.spec.hidden = hdr.at("hidden").get<std::vector<int>>();
    blob.spec.skip_layers = hdr.at("skip_layers").get<std::vector<int>>();
    const std::string outact = hdr.at("output").get<std::string>();
    if (outact == "softplus")
        blob.spec.output = FieldSpec::Output::softplus;
    else if (outact == "relu")
        blob.spec.output = FieldSpec::Output::relu;
    else
        throw IoError("unknown output activation '" + outact + "'");
    blob.spec.encoding = encoding_from_json(hdr.at("encoding"));
    blob.seed = hdr.at("seed").get<std::uint64_t>();
    const std::size_t count = hdr.at("count").get<std::size_t>();
    if (12 + hlen + count * 4 != bytes.size()) throw IoError("field blob size mismatch");
    blob.params.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        float f;
        std::memcpy(&f, bytes.data() + 12 + hlen + i * 4, 4);
        blob.params[i] = f;
    }
    return blob;
}

}  // namespace cocoa
