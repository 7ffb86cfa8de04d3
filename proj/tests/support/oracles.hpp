#pragma once

// Straightforward reference implementations used to cross-check the library.
// They deliberately share no code with src/.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "veriflow/eval.hpp"
#include "veriflow/gallery.hpp"

namespace oracle {

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    long double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<long double>(a[i]) * b[i];
        na += static_cast<long double>(a[i]) * a[i];
        nb += static_cast<long double>(b[i]) * b[i];
    }
    return static_cast<double>(dot / (std::sqrt(na) * std::sqrt(nb)));
}

inline std::vector<double> values(const veriflow::EmbeddingVector& v) {
    return {v.values().begin(), v.values().end()};
}

// Plain loop over stored (already normalized) vectors: max per person, ties to the smaller id.
struct Ranked {
    std::string person_id;
    std::string display_name;
    double score;
};

inline std::vector<Ranked> rank_all(const veriflow::GalleryIndex& g, const veriflow::EmbeddingVector& q) {
    std::vector<Ranked> out;
    const auto qv = values(q);
    for (const auto& p : g.persons()) {
        double best = -2.0;
        for (const auto& e : p.embeddings) {
            double dot = 0;
            const auto ev = values(e);
            for (std::size_t i = 0; i < ev.size(); ++i) dot += ev[i] * qv[i];
            dot = std::min(1.0, std::max(-1.0, dot));
            if (dot > best) best = dot;
        }
        out.push_back({p.person_id, p.display_name, best});
    }
    // insertion sort, descending score then ascending id
    for (std::size_t i = 1; i < out.size(); ++i) {
        for (std::size_t j = i; j > 0; --j) {
            const auto& a = out[j - 1];
            const auto& b = out[j];
            const bool swap = b.score > a.score || (b.score == a.score && b.person_id < a.person_id);
            if (!swap) break;
            std::swap(out[j - 1], out[j]);
        }
    }
    return out;
}

inline veriflow::Metrics recount(const veriflow::ConfusionMatrix& c) {
    veriflow::Metrics m;
    const double tp = double(c.tp), fp = double(c.fp), tn = double(c.tn), fn = double(c.fn);
    auto div = [&](const char* name, double num, double den) {
        if (den == 0) {
            m.undefined.push_back(name);
            return 0.0;
        }
        return num / den;
    };
    m.accuracy = div("accuracy", tp + tn, tp + tn + fp + fn);
    m.precision = div("precision", tp, tp + fp);
    m.recall = div("recall", tp, tp + fn);
    m.f1 = div("f1", 2 * tp, 2 * tp + fp + fn);
    m.fpr = div("fpr", fp, fp + tn);
    m.fnr = div("fnr", fn, fn + tp);
    return m;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(dim);
    for (auto& x : v) x = n(rng);
    return v;
}

}  // namespace oracle
