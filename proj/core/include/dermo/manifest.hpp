#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dermo/imaging.hpp"

namespace dermo::pipeline {

enum class Split { Train, Validation, Test };
std::string to_string(Split s);
Split split_from_string(const std::string& s);

/// Image region a feature is computed on.
enum class Context { WI, CR, CRGT };
std::string to_string(Context c);
Context context_from_string(const std::string& s);

struct ManifestEntry {
  std::string sample_id;
  std::filesystem::path image_path;
  std::optional<std::filesystem::path> mask_path;       // ground truth
  std::optional<std::filesystem::path> pred_mask_path;  // automatic segmentation
  std::optional<int> label;
  Split split = Split::Train;
};

inline constexpr const char* kManifestHeader = "sample_id,image_path,mask_path,pred_mask_path,label,split";

/// Parses manifest CSV text; relative paths are resolved against base_dir.
/// Referenced files must exist. Errors are ParseError with the line number.
std::vector<ManifestEntry> parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
/// Writes entries with absolute paths.
std::string manifest_to_csv(const std::vector<ManifestEntry>& entries);

/// Moves a seeded, class-stratified `fraction` of the Train entries to
/// Validation. Entries with any other split are left alone.
void assign_validation_split(std::vector<ManifestEntry>& entries, double fraction, std::uint64_t seed);

/// WI always; CR when a predicted mask is present; CRGT when a ground-truth
/// mask is present. A crop whose mask has no foreground falls back to WI.
/// Masks whose size differs from the image are resized (nearest) first.
std::map<Context, ImageTensor> build_contexts(const ManifestEntry& entry);

/// Same, loading only the requested contexts. Requesting CR or CRGT for an
/// entry without the matching mask is a ValidationError.
std::map<Context, ImageTensor> build_contexts(const ManifestEntry& entry,
                                              const std::vector<Context>& wanted);

}  // namespace dermo::pipeline
