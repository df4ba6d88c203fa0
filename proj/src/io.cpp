#include "grf/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace grf::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "GRF1 writer assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw std::runtime_error("GRF1: truncated file");
    return v;
}

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
    auto t = path;
    t += ".tmp";
    return t;
}

}  // namespace

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = temp_sibling(path);
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string());
        os << content;
    }
    std::filesystem::rename(tmp, path);
}

void write_grid(const std::filesystem::path& path, const Grid& grid,
                const std::vector<double>& T, PayloadTag tag) {
    if (T.size() != grid.dims()) throw std::invalid_argument("write_grid: T arity mismatch");
    auto tmp = temp_sibling(path);
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string());
        os.write("GRF1", 4);
        put<std::uint32_t>(os, 1);
        put<std::uint32_t>(os, static_cast<std::uint32_t>(grid.dims()));
        for (std::size_t e : grid.shape) put<std::uint64_t>(os, e);
        for (double t : T) put<double>(os, t);
        put<std::uint8_t>(os, static_cast<std::uint8_t>(tag));
        os.write(reinterpret_cast<const char*>(grid.data.data()),
                 static_cast<std::streamsize>(grid.data.size() * sizeof(double)));
        if (!os) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

GridFile read_grid(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "GRF1", 4) != 0)
        throw std::runtime_error("not a GRF1 file: " + path.string());
    auto version = get<std::uint32_t>(is);
    if (version != 1) throw std::runtime_error("unsupported GRF1 version");
    auto dims = get<std::uint32_t>(is);
    if (dims == 0 || dims > 16) throw std::runtime_error("GRF1: bad dims");

    GridFile out;
    std::vector<std::size_t> shape(dims);
    for (auto& e : shape) e = static_cast<std::size_t>(get<std::uint64_t>(is));
    out.T.resize(dims);
    for (auto& t : out.T) t = get<double>(is);
    out.tag = static_cast<PayloadTag>(get<std::uint8_t>(is));
    out.grid = Grid(shape);
    is.read(reinterpret_cast<char*>(out.grid.data.data()),
            static_cast<std::streamsize>(out.grid.data.size() * sizeof(double)));
    if (!is) throw std::runtime_error("GRF1: truncated payload");
    return out;
}

std::string filter_text(const RationalFilter1D& filter) {
    std::ostringstream os;
    os.precision(17);
    os << "a:";
    for (double v : filter.a) os << ' ' << v;
    os << "\nb:";
    for (double v : filter.b) os << ' ' << v;
    os << '\n';
    return os.str();
}

nlohmann::json filter_document(const RationalFilter1D& filter, const MESolveReport& report) {
    return nlohmann::json{
        {"ar_order", filter.ar_order()},
        {"ma_order", filter.ma_order()},
        {"a", filter.a},
        {"b", filter.b},
        {"dual_iterations", report.iterations},
        {"final_gradient_norm", report.final_gradient_norm},
        {"moment_residuals", report.moment_residuals},
        {"converged", report.converged},
    };
}

void write_filter(const std::filesystem::path& path, const RationalFilter1D& filter,
                  const MESolveReport& report) {
    write_text_atomic(path, filter_document(filter, report).dump(2) + "\n");
}

RationalFilter1D read_filter(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    auto j = nlohmann::json::parse(is);
    RationalFilter1D f;
    f.a = j.at("a").get<std::vector<double>>();
    f.b = j.at("b").get<std::vector<double>>();
    f.validate();
    return f;
}

nlohmann::json model_to_json(const CovarianceModel& model) {
    nlohmann::json kernels = nlohmann::json::array();
    for (const auto& k : model.kernels) {
        nlohmann::json kj;
        switch (k.kind) {
            case KernelKind::Exponential: kj["kind"] = "exp"; break;
            case KernelKind::Gaussian: kj["kind"] = "gauss"; break;
            case KernelKind::Custom: kj["kind"] = "custom"; break;
        }
        kj["sigma2"] = k.sigma2;
        if (k.kind == KernelKind::Custom)
            kj["seq"] = k.custom_seq;
        else
            kj["alpha"] = k.alpha;
        kernels.push_back(std::move(kj));
    }
    return nlohmann::json{{"kernels", kernels}, {"T", model.T}};
}

CovarianceModel model_from_json(const nlohmann::json& j) {
    CovarianceModel model;
    model.T = j.at("T").get<std::vector<double>>();
    for (const auto& kj : j.at("kernels")) {
        std::string kind = kj.at("kind");
        if (kind == "exp")
            model.kernels.push_back(Kernel1D::exponential(kj.at("sigma2"), kj.at("alpha")));
        else if (kind == "gauss")
            model.kernels.push_back(Kernel1D::gaussian(kj.at("sigma2"), kj.at("alpha")));
        else if (kind == "custom")
            model.kernels.push_back(Kernel1D::custom(kj.at("seq").get<std::vector<double>>()));
        else
            throw std::runtime_error("unknown kernel kind: " + kind);
    }
    model.validate();
    return model;
}

void write_state(const std::filesystem::path& manifest_path, const RefinementState& state) {
    auto stem = manifest_path;
    stem.replace_extension();

    auto field_path = stem.string() + ".field.grf";
    auto noise_path = stem.string() + ".noise.grf";
    write_grid(field_path, state.field.grid, state.field.T, PayloadTag::Field);
    write_grid(noise_path, state.noise.grid, state.model.T, PayloadTag::Noise);

    nlohmann::json j{
        {"format", "grf-state"},
        {"version", 1},
        {"model", model_to_json(state.model)},
        {"seed", state.field.seed},
        {"scale_level", state.field.scale_level},
        {"burn_in", state.burn_in},
        {"field_file", std::filesystem::path(field_path).filename().string()},
        {"noise_file", std::filesystem::path(noise_path).filename().string()},
    };
    if (state.y1_grid) {
        auto y1_path = stem.string() + ".y1.grf";
        write_grid(y1_path, *state.y1_grid, state.field.T, PayloadTag::Field);
        j["y1_file"] = std::filesystem::path(y1_path).filename().string();
    }
    if (state.y2_col0) j["y2_col0"] = *state.y2_col0;
    write_text_atomic(manifest_path, j.dump(2) + "\n");
}

RefinementState read_state(const std::filesystem::path& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) throw std::runtime_error("cannot open " + manifest_path.string());
    auto j = nlohmann::json::parse(is);
    if (j.value("format", "") != "grf-state")
        throw std::runtime_error("not a grf-state manifest: " + manifest_path.string());

    auto dir = manifest_path.parent_path();
    RefinementState state;
    state.model = model_from_json(j.at("model"));
    state.burn_in = j.at("burn_in").get<std::vector<std::size_t>>();

    auto field_path = dir / j.at("field_file").get<std::string>();
    auto noise_path = dir / j.at("noise_file").get<std::string>();
    if (!std::filesystem::exists(noise_path))
        throw std::runtime_error("missing noise file " + noise_path.string() +
                                 "; re-run `grf gen` with the manifest's model and seed to "
                                 "regenerate the state");
    auto ff = read_grid(field_path);
    auto nf = read_grid(noise_path);
    state.field.grid = std::move(ff.grid);
    state.field.T = std::move(ff.T);
    state.field.seed = j.at("seed");
    state.field.scale_level = j.at("scale_level");
    state.noise.grid = std::move(nf.grid);
    state.noise.seed = state.field.seed;

    for (std::size_t j2 = 0; j2 < state.model.dims(); ++j2) {
        auto built = build_filter(state.model.kernels[j2], state.model.T[j2]);
        state.filters.push_back(std::move(built.filter));
    }
    if (j.contains("y1_file")) state.y1_grid = read_grid(dir / j.at("y1_file").get<std::string>()).grid;
    if (j.contains("y2_col0")) state.y2_col0 = j.at("y2_col0").get<std::vector<double>>();
    state.validate();
    return state;
}

}  // namespace grf::io
