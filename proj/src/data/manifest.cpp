#include "bcop/data/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "bcop/error.hpp"

namespace bcop {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string_view s) {
  std::string out;
  for (char ch : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  return out;
}

bool is_image_file(const fs::path& p) {
  const std::string ext = lower(p.extension().string());
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".ppm" || ext == ".rgb";
}

bool readable(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return in.good() && in.peek() != std::ifstream::traits_type::eof();
}

}  // namespace

std::optional<int> class_from_name(std::string_view name) {
  const std::string n = lower(name);
  if (n == "correct" || n == "cmfd") return 0;
  if (n == "nose" || n == "imfd_nose") return 1;
  if (n == "nose_mouth" || n == "imfd_nose_mouth" || n == "imfd_nose_and_mouth") return 2;
  if (n == "chin" || n == "imfd_chin") return 3;
  return std::nullopt;
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

std::array<std::size_t, kNumClasses> Manifest::class_counts() const {
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& r : records) ++counts[static_cast<std::size_t>(r.label)];
  return counts;
}

Manifest build_manifest(const fs::path& root, Split split) {
  Manifest m;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) fail(ErrorCode::kIo, "dataset root is not a directory: " + root.string());
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  std::map<fs::path, fs::path> seen;  // canonical -> first path
  for (const auto& dir : class_dirs) {
    const auto label = class_from_name(dir.filename().string());
    if (!label) fail(ErrorCode::kInvalidArgument, "unknown class directory '" + dir.filename().string() + "'");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_directory(ec)) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      if (!is_image_file(f) || !readable(f)) {
        ++m.warnings;
        continue;
      }
      const fs::path canonical = fs::weakly_canonical(f);
      if (auto it = seen.find(canonical); it != seen.end()) {
        fail(ErrorCode::kInvalidArgument, "duplicate image " + canonical.string() + " via " +
                                              it->second.string() + " and " + f.string());
      }
      seen.emplace(canonical, f);
      m.records.push_back({f, *label, split});
    }
  }
  std::sort(m.records.begin(), m.records.end(),
            [](const ManifestRecord& a, const ManifestRecord& b) { return a.path < b.path; });
  if (m.records.empty()) ++m.warnings;
  return m;
}

Manifest balance(const Manifest& manifest, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    by_class[static_cast<std::size_t>(manifest.records[i].label)].push_back(i);
  }
  std::size_t target = manifest.records.size();
  for (int c = 0; c < kNumClasses; ++c) {
    if (by_class[c].empty()) {
      fail(ErrorCode::kEmptyDataset, "balance: class '" + std::string(kClassNames[c]) + "' has no samples");
    }
    target = std::min(target, by_class[c].size());
  }
  std::mt19937_64 rng(seed);
  Manifest out;
  out.seed = seed;
  out.warnings = manifest.warnings;
  for (auto& idx : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < target; ++k) out.records.push_back(manifest.records[idx[k]]);
  }
  std::shuffle(out.records.begin(), out.records.end(), rng);
  return out;
}

void write_manifest_csv(const Manifest& manifest, std::ostream& out) {
  out << "path,label,split\n";
  for (const auto& r : manifest.records) {
    out << r.path.string() << ',' << r.label << ',' << to_string(r.split) << '\n';
  }
}

Manifest read_manifest_csv(std::istream& in) {
  Manifest m;
  std::string line;
  if (!std::getline(in, line) || line != "path,label,split") {
    fail(ErrorCode::kFormat, "manifest: expected header 'path,label,split'");
  }
  std::set<std::pair<Split, std::string>> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto last = line.rfind(',');
    const auto mid = last == std::string::npos ? std::string::npos : line.rfind(',', last - 1);
    if (mid == std::string::npos) fail(ErrorCode::kFormat, "manifest line " + std::to_string(line_no) + ": expected 3 fields");
    const std::string path = line.substr(0, mid);
    const std::string label_text = line.substr(mid + 1, last - mid - 1);
    const auto split = parse_split(line.substr(last + 1));
    int label = -1;
    try {
      label = std::stoi(label_text);
    } catch (const std::exception&) {
    }
    if (label < 0 || label >= kNumClasses) {
      fail(ErrorCode::kFormat, "manifest line " + std::to_string(line_no) + ": bad label '" + label_text + "'");
    }
    if (!split) fail(ErrorCode::kFormat, "manifest line " + std::to_string(line_no) + ": bad split");
    if (!seen.emplace(*split, path).second) {
      fail(ErrorCode::kFormat, "manifest line " + std::to_string(line_no) + ": duplicate path " + path);
    }
    m.records.push_back({path, label, *split});
  }
  return m;
}

Dataset load_dataset(const Manifest& manifest, std::optional<Split> split) {
  Dataset data;
  for (const auto& r : manifest.records) {
    if (split && r.split != *split) continue;
    data.images.push_back(load_image(r.path));
    data.labels.push_back(r.label);
  }
  return data;
}

}  // namespace bcop
