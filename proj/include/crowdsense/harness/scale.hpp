#pragma once

#include <array>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "crowdsense/grid/types.hpp"

namespace crowdsense {

enum class Dataset { TDrive, Grab };
enum class ScaleName { Small, Medium, Large };

inline const char* to_string(Dataset d) { return d == Dataset::TDrive ? "tdrive" : "grab"; }
inline const char* to_string(ScaleName s) {
  switch (s) {
    case ScaleName::Small: return "Small";
    case ScaleName::Medium: return "Medium";
    case ScaleName::Large: return "Large";
  }
  return "?";
}

struct ScaleConfig {
  ScaleName name = ScaleName::Small;
  Dataset dataset = Dataset::TDrive;
  int workers = 20;
  int width = 8;
  int height = 8;
  double budget = 40.0;
  int horizon_minutes = 120;
  int slot_minutes = 15;

  int regions() const { return width * height; }
  int num_slots() const { return horizon_minutes / slot_minutes; }
  GridSpec grid() const { return {width, height, num_slots(), static_cast<double>(slot_minutes)}; }
  std::string label() const { return fmt::format("{}-{}", to_string(dataset), to_string(name)); }

  void validate() const {
    if (workers < 0 || width < 1 || height < 1 || slot_minutes < 1 || horizon_minutes < 1) {
      throw DomainError("scale config has non-positive extents");
    }
    if (horizon_minutes % slot_minutes != 0) throw DomainError("horizon must be a multiple of the slot length");
    if (num_slots() < 2) throw DomainError("horizon must span at least two slots");
    if (budget < 0.0) throw DomainError("budget must be non-negative");
  }
};

/// The six dataset configurations: T-Drive uses 15-minute slots, Grab-Posisi 5-minute slots.
inline ScaleConfig scale_config(Dataset dataset, ScaleName name) {
  if (dataset == Dataset::TDrive) {
    switch (name) {
      case ScaleName::Small: return {name, dataset, 20, 8, 8, 40.0, 120, 15};
      case ScaleName::Medium: return {name, dataset, 40, 16, 16, 60.0, 240, 15};
      case ScaleName::Large: return {name, dataset, 60, 32, 32, 100.0, 360, 15};
    }
  }
  switch (name) {
    case ScaleName::Small: return {name, dataset, 15, 8, 4, 40.0, 40, 5};
    case ScaleName::Medium: return {name, dataset, 30, 16, 8, 60.0, 80, 5};
    case ScaleName::Large: return {name, dataset, 45, 32, 16, 100.0, 160, 5};
  }
  return {};
}

inline ScaleName scale_name_from_string(std::string_view s) {
  if (s == "Small" || s == "small") return ScaleName::Small;
  if (s == "Medium" || s == "medium") return ScaleName::Medium;
  if (s == "Large" || s == "large") return ScaleName::Large;
  throw FormatError("unknown scale '" + std::string(s) + "'");
}

inline Dataset dataset_from_string(std::string_view s) {
  if (s == "tdrive" || s == "t-drive" || s == "T-Drive") return Dataset::TDrive;
  if (s == "grab" || s == "grab-posisi" || s == "Grab-Posisi") return Dataset::Grab;
  throw FormatError("unknown dataset '" + std::string(s) + "'");
}

}  // namespace crowdsense
