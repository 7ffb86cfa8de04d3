#include "veriflow/gallery.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "veriflow/error.hpp"

namespace veriflow {

namespace {

constexpr double kZeroNormFloor = 1e-12;
// Stored vectors whose norm is already this close to 1 are kept bit-for-bit on load.
constexpr double kUnitNormSlack = 1e-12;

double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

void require_same_dimension(std::size_t a, std::size_t b) {
    if (a != b) {
        throw Error(ErrorCode::DimensionMismatch,
                    "dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

double person_score(const PersonRecord& person, const EmbeddingVector& query) {
    double best = -1.0;
    for (const auto& e : person.embeddings) best = std::max(best, cosine_similarity(e, query));
    return best;
}

}  // namespace

EmbeddingVector normalize_embedding(std::span<const double> raw) {
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i])) {
            throw Error(ErrorCode::NonFiniteComponent,
                        "non-finite embedding component at index " + std::to_string(i));
        }
        sum_sq += raw[i] * raw[i];
    }
    const double norm = std::sqrt(sum_sq);
    if (!(norm >= kZeroNormFloor)) throw Error(ErrorCode::ZeroVector, "embedding has zero norm");

    std::vector<double> unit(raw.begin(), raw.end());
    for (double& v : unit) v /= norm;
    return EmbeddingVector(std::move(unit));
}

EmbeddingVector normalize_embedding(std::span<const double> raw, std::size_t dimension) {
    require_same_dimension(raw.size(), dimension);
    return normalize_embedding(raw);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    require_same_dimension(a.size(), b.size());
    const double denom = std::sqrt(dot(a, a)) * std::sqrt(dot(b, b));
    if (denom == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
    return clamp_unit(dot(a, b) / denom);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    require_same_dimension(a.dimension(), b.dimension());
    return clamp_unit(dot(a.values(), b.values()));
}

GalleryIndex::GalleryIndex(std::size_t dimension, std::size_t embedding_cap)
    : dimension_(dimension), embedding_cap_(embedding_cap) {
    if (dimension == 0) throw Error(ErrorCode::InvalidArgument, "gallery dimension must be positive");
    if (embedding_cap == 0) throw Error(ErrorCode::InvalidArgument, "embedding cap must be positive");
}

std::size_t GalleryIndex::embedding_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : persons_) n += p.embeddings.size();
    return n;
}

const PersonRecord* GalleryIndex::find(std::string_view person_id) const {
    auto it = std::find_if(persons_.begin(), persons_.end(),
                           [&](const PersonRecord& p) { return p.person_id == person_id; });
    return it == persons_.end() ? nullptr : &*it;
}

std::string GalleryIndex::next_person_id() const {
    std::size_t seq = persons_.size() + 1;
    for (;; ++seq) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "p%06zu", seq);
        if (!find(buf)) return buf;
    }
}

std::string GalleryIndex::add_person(std::string display_name,
                                     std::span<const std::vector<double>> raw_embeddings) {
    if (raw_embeddings.empty()) {
        throw Error(ErrorCode::InvalidArgument, "person '" + display_name + "' has no embeddings");
    }
    if (raw_embeddings.size() > embedding_cap_) {
        throw Error(ErrorCode::EmbeddingCapExceeded,
                    std::to_string(raw_embeddings.size()) + " embeddings exceeds cap of " +
                        std::to_string(embedding_cap_));
    }
    PersonRecord record{next_person_id(), std::move(display_name), {}};
    record.embeddings.reserve(raw_embeddings.size());
    for (const auto& raw : raw_embeddings) record.embeddings.push_back(normalize_embedding(raw, dimension_));
    persons_.push_back(std::move(record));
    return persons_.back().person_id;
}

void GalleryIndex::insert(PersonRecord record) {
    if (find(record.person_id)) {
        throw Error(ErrorCode::DuplicatePersonId, "duplicate person id '" + record.person_id + "'");
    }
    if (record.embeddings.empty()) {
        throw Error(ErrorCode::InvalidArgument, "person '" + record.person_id + "' has no embeddings");
    }
    if (record.embeddings.size() > embedding_cap_) {
        throw Error(ErrorCode::EmbeddingCapExceeded,
                    "person '" + record.person_id + "' exceeds embedding cap");
    }
    for (const auto& e : record.embeddings) require_same_dimension(e.dimension(), dimension_);
    persons_.push_back(std::move(record));
}

std::string add_person(GalleryIndex& gallery, std::string display_name,
                       std::span<const std::vector<double>> raw_embeddings) {
    return gallery.add_person(std::move(display_name), raw_embeddings);
}

MatchResult match_face(const GalleryIndex& gallery, const EmbeddingVector& query, double threshold) {
    if (!(threshold > -1.0 && threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "match threshold must lie in (-1, 1]");
    }
    require_same_dimension(query.dimension(), gallery.dimension());

    const PersonRecord* best = nullptr;
    double best_score = -1.0;
    for (const auto& person : gallery.persons()) {
        const double score = person_score(person, query);
        if (!best || score > best_score || (score == best_score && person.person_id < best->person_id)) {
            best = &person;
            best_score = score;
        }
    }
    if (best && best_score >= threshold) return Matched{best->person_id, best->display_name, best_score};
    return Unknown{best ? best_score : -1.0};
}

std::vector<ScoredPerson> search_top_k(const GalleryIndex& gallery, const EmbeddingVector& query,
                                       std::size_t k) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
    require_same_dimension(query.dimension(), gallery.dimension());

    std::vector<ScoredPerson> scored;
    scored.reserve(gallery.size());
    for (const auto& person : gallery.persons()) scored.push_back({person.person_id, person_score(person, query)});

    const auto by_rank = [](const ScoredPerson& a, const ScoredPerson& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.person_id < b.person_id;
    };
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), by_rank);
    scored.resize(n);
    return scored;
}

// ---------------------------------------------------------------------------
// Serialization

class GalleryCodec {
public:
    static EmbeddingVector decode(std::vector<double> values) {
        double sum_sq = 0.0;
        for (double v : values) {
            if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteComponent, "non-finite stored component");
            sum_sq += v * v;
        }
        if (std::abs(std::sqrt(sum_sq) - 1.0) <= kUnitNormSlack) return EmbeddingVector(std::move(values));
        return normalize_embedding(values);
    }
};

void save_gallery(const GalleryIndex& gallery, std::ostream& sink) {
    nlohmann::json persons = nlohmann::json::array();
    for (const auto& p : gallery.persons()) {
        nlohmann::json embeddings = nlohmann::json::array();
        for (const auto& e : p.embeddings) {
            embeddings.push_back(std::vector<double>(e.values().begin(), e.values().end()));
        }
        persons.push_back({{"id", p.person_id}, {"name", p.display_name}, {"embeddings", std::move(embeddings)}});
    }
    nlohmann::json doc = {
        {"version", gallery.version()}, {"dimension", gallery.dimension()}, {"persons", std::move(persons)}};
    sink << doc.dump() << '\n';
    if (!sink) throw Error(ErrorCode::Io, "failed writing gallery");
}

GalleryIndex load_gallery(std::istream& source, std::size_t embedding_cap) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(source);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::CorruptRecord, std::string("gallery is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("version")) {
        throw Error(ErrorCode::CorruptRecord, "gallery document lacks a version field");
    }
    if (!doc["version"].is_number_integer() || doc["version"].get<int>() != kGalleryFormatVersion) {
        throw Error(ErrorCode::FormatVersionUnsupported, "unsupported gallery version " + doc["version"].dump());
    }
    try {
        const auto dimension = doc.at("dimension").get<std::size_t>();
        GalleryIndex gallery(dimension, embedding_cap);
        for (const auto& p : doc.at("persons")) {
            PersonRecord record{p.at("id").get<std::string>(), p.at("name").get<std::string>(), {}};
            for (const auto& e : p.at("embeddings")) {
                auto values = e.get<std::vector<double>>();
                if (values.size() != dimension) {
                    throw Error(ErrorCode::DimensionMismatch,
                                "person '" + record.person_id + "' has an embedding of length " +
                                    std::to_string(values.size()) + ", expected " + std::to_string(dimension));
                }
                record.embeddings.push_back(GalleryCodec::decode(std::move(values)));
            }
            if (record.embeddings.empty()) {
                throw Error(ErrorCode::CorruptRecord, "person '" + record.person_id + "' has no embeddings");
            }
            gallery.insert(std::move(record));
        }
        return gallery;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptRecord, std::string("malformed gallery record: ") + e.what());
    }
}

void save_gallery_file(const GalleryIndex& gallery, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    save_gallery(gallery, out);
}

GalleryIndex load_gallery_file(const std::filesystem::path& path, std::size_t embedding_cap) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open gallery '" + path.string() + "'");
    return load_gallery(in, embedding_cap);
}

}  // namespace veriflow
