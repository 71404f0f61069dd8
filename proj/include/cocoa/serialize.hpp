#pragma once

// On-disk interchange: aberration JSON (ANSI index string → λ coefficient),
// stack sidecar JSON (pitch and camera/optics provenance), loss-trace CSV,
// metrics-report JSON, and the field parameter blob (JSON header + raw
// little-endian float32 weights).

#include <cstdint>
#include <string>
#include <vector>

#include "cocoa/field.hpp"
#include "cocoa/loss.hpp"
#include "cocoa/metrics.hpp"
#include "cocoa/types.hpp"
#include "cocoa/zernike.hpp"

namespace cocoa {

std::string aberration_to_json(const WavefrontAberration& a);
WavefrontAberration aberration_from_json_text(const std::string& text);
void save_aberration(const std::string& path, const WavefrontAberration& a);
WavefrontAberration load_aberration(const std::string& path);

// Sidecar carried next to every stack/structure TIFF. Unknown values stay 0.
struct StackSidecar {
    Pitches pitch{0.25, 0.1, 0.1};
    double gain = 0.0, readout = 0.0;
    double wavelength = 0.0, numerical_aperture = 0.0;
};

void save_sidecar(const std::string& path, const StackSidecar& s);
StackSidecar load_sidecar(const std::string& path);

void save_loss_trace(const std::string& path, const std::vector<LossBreakdown>& trace);

std::string metrics_report_to_json(const MetricsReport& report);
void save_metrics_report(const std::string& path, const MetricsReport& report);

struct FieldBlob {
    FieldSpec spec;
    std::vector<double> params;  // narrowed through float32 on disk
    std::uint64_t seed = 0;
};

void save_field(const std::string& path, const FieldSpec& spec,
                const std::vector<double>& params, std::uint64_t seed);
FieldBlob load_field(const std::string& path);

// Shared text-file helpers (atomic overwrite is NOT provided; callers mark
// failures with a `.failed` sentinel instead).
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace cocoa
