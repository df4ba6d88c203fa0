#pragma once

#include <filesystem>
#include <string>

#include "grf/covariance.hpp"
#include "grf/grid.hpp"
#include "grf/multiscale.hpp"
#include "grf/spectral.hpp"

#include <nlohmann/json_fwd.hpp>

namespace grf::io {

enum class PayloadTag : std::uint8_t { Field = 0, Noise = 1 };

/// Write a grid in the GRF1 binary format:
/// "GRF1" | u32 version=1 | u32 dims | u64 N_j ... | f64 T_j ... |
/// u8 payload tag | f64 little-endian row-major payload.
/// Files are written atomically (temp + rename).
void write_grid(const std::filesystem::path& path, const Grid& grid,
                const std::vector<double>& T, PayloadTag tag);

struct GridFile {
    Grid grid;
    std::vector<double> T;
    PayloadTag tag;
};
GridFile read_grid(const std::filesystem::path& path);

/// Filter document: orders, coefficients and solve diagnostics as JSON.
nlohmann::json filter_document(const RationalFilter1D& filter, const MESolveReport& report);
void write_filter(const std::filesystem::path& path, const RationalFilter1D& filter,
                  const MESolveReport& report);
RationalFilter1D read_filter(const std::filesystem::path& path);

/// Plain-text coefficient form: "a: 1 -0.92004" / "b: 0.39181".
std::string filter_text(const RationalFilter1D& filter);

nlohmann::json model_to_json(const CovarianceModel& model);
CovarianceModel model_from_json(const nlohmann::json& j);

/// Persist/load a refinement state: field + noise grids (plus the
/// intermediate grid for refined states) and a JSON manifest.
void write_state(const std::filesystem::path& manifest_path, const RefinementState& state);
RefinementState read_state(const std::filesystem::path& manifest_path);

void write_text_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace grf::io
