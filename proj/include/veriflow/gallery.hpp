#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace veriflow {

inline constexpr std::size_t kDefaultEmbeddingDimension = 512;
inline constexpr std::size_t kDefaultEmbeddingCap = 20;
inline constexpr double kDefaultMatchThreshold = 0.6;
inline constexpr int kGalleryFormatVersion = 1;

/// Unit-length face embedding. Only constructible through normalize_embedding(),
/// so every instance has finite components and an L2 norm within 1e-6 of 1.
class EmbeddingVector {
public:
    std::span<const double> values() const noexcept { return values_; }
    std::size_t dimension() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

private:
    friend EmbeddingVector normalize_embedding(std::span<const double>);
    friend class GalleryCodec;
    explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {}

    std::vector<double> values_;
};

/// Scales `raw` to unit length. Throws ZeroVector, NonFiniteComponent.
EmbeddingVector normalize_embedding(std::span<const double> raw);

/// As above, also rejecting inputs whose length differs from `dimension` (DimensionMismatch).
EmbeddingVector normalize_embedding(std::span<const double> raw, std::size_t dimension);

/// (a . b) / (|a| |b|) on raw vectors, clamped to [-1, 1].
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// For unit vectors the cosine reduces to the dot product; clamped to [-1, 1].
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct PersonRecord {
    std::string person_id;
    std::string display_name;
    std::vector<EmbeddingVector> embeddings;

    friend bool operator==(const PersonRecord&, const PersonRecord&) = default;
};

struct Matched {
    std::string person_id;
    std::string display_name;
    double similarity = 0.0;
};

struct Unknown {
    /// -1 when the gallery is empty.
    double best_similarity = -1.0;
};

using MatchResult = std::variant<Matched, Unknown>;

struct ScoredPerson {
    std::string person_id;
    double score = 0.0;

    friend bool operator==(const ScoredPerson&, const ScoredPerson&) = default;
};

/// Roster of known persons. Built single-threaded, then read-only: concurrent
/// match_face/search_top_k calls on a const gallery are safe.
class GalleryIndex {
public:
    explicit GalleryIndex(std::size_t dimension = kDefaultEmbeddingDimension,
                          std::size_t embedding_cap = kDefaultEmbeddingCap);

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t embedding_cap() const noexcept { return embedding_cap_; }
    int version() const noexcept { return kGalleryFormatVersion; }

    std::span<const PersonRecord> persons() const noexcept { return persons_; }
    std::size_t size() const noexcept { return persons_.size(); }
    bool empty() const noexcept { return persons_.empty(); }
    std::size_t embedding_count() const noexcept;

    const PersonRecord* find(std::string_view person_id) const;

    /// Normalizes and stores the embeddings under a freshly generated id, which is returned.
    /// Throws EmbeddingCapExceeded, DimensionMismatch, ZeroVector, NonFiniteComponent.
    std::string add_person(std::string display_name, std::span<const std::vector<double>> raw_embeddings);

    /// Inserts a fully formed record (used by the loader). Throws DuplicatePersonId,
    /// DimensionMismatch, EmbeddingCapExceeded.
    void insert(PersonRecord record);

    friend bool operator==(const GalleryIndex& a, const GalleryIndex& b) {
        return a.dimension_ == b.dimension_ && a.persons_ == b.persons_;
    }

private:
    std::string next_person_id() const;

    std::size_t dimension_;
    std::size_t embedding_cap_;
    std::vector<PersonRecord> persons_;
};

std::string add_person(GalleryIndex& gallery, std::string display_name,
                       std::span<const std::vector<double>> raw_embeddings);

/// Per-person score is the max cosine over that person's embeddings. The best person
/// (ties broken by smallest person_id) is Matched iff its score >= threshold.
/// `threshold` must lie in (-1, 1].
MatchResult match_face(const GalleryIndex& gallery, const EmbeddingVector& query,
                       double threshold = kDefaultMatchThreshold);

/// Top `k` persons by score, descending, ties by person_id ascending.
std::vector<ScoredPerson> search_top_k(const GalleryIndex& gallery, const EmbeddingVector& query,
                                       std::size_t k);

// Gallery file: {"version":1,"dimension":D,"persons":[{"id","name","embeddings":[[...]]}]}
void save_gallery(const GalleryIndex& gallery, std::ostream& sink);
GalleryIndex load_gallery(std::istream& source, std::size_t embedding_cap = kDefaultEmbeddingCap);

void save_gallery_file(const GalleryIndex& gallery, const std::filesystem::path& path);
GalleryIndex load_gallery_file(const std::filesystem::path& path,
                               std::size_t embedding_cap = kDefaultEmbeddingCap);

}  // namespace veriflow
