#pragma once

#include <string>

#include "nldpe/acam.hpp"
#include "nldpe/crossbar.hpp"
#include "nldpe/dtcompile.hpp"
#include "nldpe/noise.hpp"

namespace nldpe {

// Structured-text image formats. All numbers print as %.17g so a written
// image reads back bit-identically.

std::string compiled_to_text(const CompiledFunction& c);
CompiledFunction compiled_from_text(const std::string& text);

std::string unit_to_text(const AcamUnit& u);
AcamUnit unit_from_text(const std::string& text);

std::string crossbar_to_text(const CrossbarImage& img);
CrossbarImage crossbar_from_text(const std::string& text);

/// CSV rows of (array, row, col, mode); for single-feature ACAM arrays the
/// col field selects the bound RRAM (0 = lo, 1 = hi).
std::string faultmap_to_csv(const FaultMap& fm);
FaultMap faultmap_from_csv(const std::string& text, std::uint64_t image_id,
                           bool acam_semantics);

std::string row_counts_csv(const CompiledFunction& c);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace nldpe
