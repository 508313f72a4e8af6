#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "fiqopt/types.hpp"

namespace fiqopt {

// Builds a Dataset from parts, validating the structural invariants: rows
// form a permutation of 0..n-1, sample ids are unique, the sample count
// matches the embedding row count, and no embedding row has zero norm.
// Throws std::runtime_error naming the offending record.
Dataset make_dataset(std::vector<SampleRecord> samples, EmbeddingMatrix embeddings);

// Manifest: UTF-8 CSV with header "sample_id,identity,base_quality,row".
// Embeddings: magic "FQEM", u32 version (= 1), u64 row count, u32 dimension,
// then n*d float32 values row-major; all integers and floats little-endian.
Dataset load_dataset(const std::filesystem::path& manifest_path,
                     const std::filesystem::path& embeddings_path);

EmbeddingMatrix read_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m);
void write_manifest(const std::filesystem::path& path,
                    const std::vector<SampleRecord>& samples);

// Quality CSV: header "sample_id,quality", one row per sample in manifest
// order, values printed with 9 significant digits.
void write_quality_csv(const std::filesystem::path& path, const Dataset& dataset,
                       const QualityVector& q);
// Reads a quality CSV back, requiring exactly one value per dataset sample.
// The result is indexed by embedding row.
QualityVector read_quality_csv(const std::filesystem::path& path, const Dataset& dataset);

// Raw base qualities rearranged into row order.
std::vector<double> base_qualities_by_row(const Dataset& dataset);

// Min-max map onto [0,1]. A degenerate range (all values equal) collapses to
// 0.5 everywhere. Throws std::invalid_argument on empty input.
QualityVector normalize_qualities(std::span<const double> raw);

// Cosine similarity, clamped to [-1,1] against rounding spill. Throws
// std::invalid_argument on dimension mismatch or a zero vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Affine map [-1,1] -> [0,1]; order-preserving.
inline double normalize_similarity(double s) { return (s + 1.0) * 0.5; }

// A pair is only as good as its worse image.
inline double pair_quality(double qi, double qj) { return qi < qj ? qi : qj; }

}  // namespace fiqopt
