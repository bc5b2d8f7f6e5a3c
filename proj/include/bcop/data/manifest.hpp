#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "bcop/data/image.hpp"

namespace bcop {

inline constexpr int kNumClasses = 4;

// Class ids follow the confusion-matrix axis: correct, nose exposed,
// nose and mouth exposed, chin exposed.
inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "correct", "nose", "nose_mouth", "chin"};

// Accepts the canonical names above and the MaskedFace-Net style folder
// names (CMFD, IMFD_Nose, IMFD_Nose_Mouth, IMFD_Chin), case-insensitive.
std::optional<int> class_from_name(std::string_view name);

enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view name);

struct ManifestRecord {
  std::filesystem::path path;
  int label = 0;
  Split split = Split::kTrain;

  bool operator==(const ManifestRecord&) const = default;
};

struct Manifest {
  std::vector<ManifestRecord> records;
  std::uint64_t seed = 0;
  std::size_t warnings = 0;

  std::array<std::size_t, kNumClasses> class_counts() const;
};

// Scans root/<class>/<image files>. Records are sorted by path; unreadable
// or non-image files are skipped and counted in `warnings`. An unknown
// class directory or the same file reachable under two classes throws.
Manifest build_manifest(const std::filesystem::path& root, Split split = Split::kTrain);

// Downsamples every class to the smallest class count (sampling without
// replacement), then shuffles. Throws kEmptyDataset if a class is empty.
Manifest balance(const Manifest& manifest, std::uint64_t seed);

// CSV with header "path,label,split"; label is the class id.
void write_manifest_csv(const Manifest& manifest, std::ostream& out);
Manifest read_manifest_csv(std::istream& in);

// Decodes every record of `split` (all records when nullopt).
Dataset load_dataset(const Manifest& manifest, std::optional<Split> split = std::nullopt);

}  // namespace bcop
