// Dataset directories, checkpoint containers, hashing and atomic writes.
#pragma once

#include "gyrodiff/synth.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gyrodiff::io {

namespace fs = std::filesystem;

std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(const std::string& bytes);
/// Throws IoError when the file cannot be read.
std::string sha256_file(const fs::path& path);

std::string read_file(const fs::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const fs::path& path, const std::string& content);

/// Little-endian float64 block with a text header line:
/// "gyrodiff-array 1 <n_seq> <n_time> <channels>\n".
std::string encode_array(const std::vector<TimeSequence>& seqs);
/// Throws FormatError for a bad header or size.
std::vector<SampleMatrix> decode_array(const std::string& bytes);

/**
 * @brief One directory per dataset.
 *
 * metadata.json plus, per split, <split>.f64 (the sample array) and
 * <split>_labels.txt (one "id heading latitude" line per sequence, headings
 * "-" when unlabelled, %.17g so values round-trip exactly).
 */
struct DatasetFiles {
    synth::DatasetSplit data;
    std::string metadata_json = "{}"; ///< caller-defined extras (noise model, seeds, ...)
};

void save_dataset(const fs::path& dir, const DatasetFiles& files);
/// Throws IoError when files are missing and FormatError when malformed.
DatasetFiles load_dataset(const fs::path& dir);

/// Hash over the array and label files of a saved dataset.
std::string dataset_hash(const fs::path& dir);

/**
 * @brief Versioned parameter container.
 *
 * Layout: the line "GYRODIFF-CHECKPOINT 1", one line of JSON header, then
 * header.n_params little-endian float64 values. The header carries the
 * SHA-256 of the parameter bytes.
 */
struct Checkpoint {
    std::string kind;                ///< "denoiser" or "heading"
    std::string header_json = "{}";  ///< architecture, schedule, config echo, seeds, ...
    Eigen::VectorXd parameters;
};

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt);
/// Throws MissingCheckpoint when absent, FormatError when malformed and
/// ChecksumError when the parameter hash does not match.
Checkpoint load_checkpoint(const fs::path& path);

} // namespace gyrodiff::io
