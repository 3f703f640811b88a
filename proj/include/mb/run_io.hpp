// Run directories: manifest.json first, then CSV series, then report.json
// and the final manifest. Numbers in CSV use "%.17g" so reruns with the same
// configuration reproduce the series byte for byte; wall time lives only in
// the manifest.
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mb/config.hpp"
#include "mb/diophantine.hpp"
#include "mb/experiments.hpp"
#include "mb/normal_form.hpp"

namespace mb {

inline constexpr std::string_view kVersion = "0.1.0";

using Json = nlohmann::ordered_json;

std::string format_double(double x);

class RunWriter {
 public:
  /// Creates `dir` if needed.
  explicit RunWriter(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  void write_json(const std::string& name, const Json& value) const;
  /// Columns then one row per entry; every row must match the column count.
  void write_csv(const std::string& name, const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows) const;

 private:
  std::filesystem::path dir_;
};

/// Manifest skeleton: command, version, config echo, embedding constant and
/// minimal normal-form divisor for the configured grid, status "incomplete".
Json make_manifest(const RunConfig& config, std::string_view command);

Json to_json(const TypeIndex& nu);
Json to_json(const AlphaClassification& cls);
Json to_json(const std::optional<LineFit>& fit);
Json to_json(const SmoothingReport& report);
Json to_json(const GrowthReport& report);
Json to_json(const AbsorbingReport& report);
Json to_json(const StationaryPair& pair);
Json to_json(const AttractorReport& report);
Json to_json(const IdentityResidual& residual);

}  // namespace mb
