// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#include "teso/geocodec/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "teso/core/errors.hpp"

namespace teso {
namespace {

std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

void check_symbol(const Model& m, int s) {
    if (s < 0 || s >= m.size())
        throw RangeError("symbol " + std::to_string(s) + " outside alphabet of size " +
                         std::to_string(m.size()));
}

}  // namespace

UniformModel::UniformModel(int size) : size_(size) {
    if (size < 1 || static_cast<std::uint32_t>(size) > kMaxTotalFrequency)
        throw PreconditionError("uniform model size out of range");
}

int UniformModel::find(std::uint32_t target, Interval& out) const {
    out = {target, 1};
    return static_cast<int>(target);
}

std::uint64_t UniformModel::state_hash() const { return static_cast<std::uint64_t>(size_); }

StaticModel::StaticModel(std::vector<std::uint32_t> freqs) : freqs_(std::move(freqs)) {
    if (freqs_.empty()) throw PreconditionError("static model needs at least one symbol");
    cum_.assign(freqs_.size() + 1, 0);
    for (std::size_t i = 0; i < freqs_.size(); ++i) {
        if (freqs_[i] == 0) throw PreconditionError("static model frequency must be positive");
        cum_[i + 1] = cum_[i] + freqs_[i];
        if (cum_[i + 1] > kMaxTotalFrequency)
            throw PreconditionError("static model total exceeds 2^16");
    }
}

StaticModel StaticModel::from_probabilities(std::span<const double> p) {
    if (p.empty()) throw PreconditionError("static model needs at least one symbol");
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    std::vector<std::uint32_t> f(p.size());
    const auto budget = static_cast<std::int64_t>(kMaxTotalFrequency);
    std::int64_t used = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        f[i] = static_cast<std::uint32_t>(std::max(1.0, std::floor(p[i] / sum * budget)));
        used += f[i];
    }
    // Trim or pad the largest entry so the total is exactly 2^16.
    auto big = std::max_element(f.begin(), f.end());
    const std::int64_t adjusted = static_cast<std::int64_t>(*big) + (budget - used);
    if (adjusted < 1) throw PreconditionError("too many symbols for a 2^16 frequency table");
    *big = static_cast<std::uint32_t>(adjusted);
    return StaticModel(std::move(f));
}

int StaticModel::find(std::uint32_t target, Interval& out) const {
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
    const int s = static_cast<int>(it - cum_.begin()) - 1;
    out = interval(s);
    return s;
}

std::uint64_t StaticModel::state_hash() const {
    std::uint64_t h = freqs_.size();
    for (auto f : freqs_) h = hash_combine(h, f);
    return h;
}

AdaptiveCategoricalModel::AdaptiveCategoricalModel(int size) {
    if (size < 1 || size > kMaxSize)
        throw PreconditionError("adaptive model alphabet of " + std::to_string(size) +
                                " symbols is unsupported");
    freqs_.assign(static_cast<std::size_t>(size), 1);
    total_ = static_cast<std::uint32_t>(size);
}

Interval AdaptiveCategoricalModel::interval(int s) const {
    std::uint32_t cum = 0;
    for (int i = 0; i < s; ++i) cum += freqs_[i];
    return {cum, freqs_[s]};
}

int AdaptiveCategoricalModel::find(std::uint32_t target, Interval& out) const {
    std::uint32_t cum = 0;
    const int n = size();
    for (int i = 0; i < n; ++i) {
        if (target < cum + freqs_[i]) {
            out = {cum, freqs_[i]};
            return i;
        }
        cum += freqs_[i];
    }
    throw StreamError("adaptive model target outside its total");
}

void AdaptiveCategoricalModel::update(int s) {
    if (total_ + kIncrement > kMaxTotalFrequency) {
        total_ = 0;
        for (auto& f : freqs_) {
            f = (f + 1) >> 1;
            total_ += f;
        }
    }
    freqs_[s] += kIncrement;
    total_ += kIncrement;
}

std::uint64_t AdaptiveCategoricalModel::state_hash() const {
    std::uint64_t h = freqs_.size();
    for (auto f : freqs_) h = hash_combine(h, f);
    return h;
}

std::unique_ptr<Model> make_model(GeometryModelId kind, int alphabet) {
    if (kind == GeometryModelId::Uniform) return std::make_unique<UniformModel>(alphabet);
    if (alphabet == 2) return std::make_unique<AdaptiveBinaryModel>();
    return std::make_unique<AdaptiveCategoricalModel>(alphabet);
}

Model& ModelBank::at(std::uint32_t context) {
    auto& slot = models_[context];
    if (!slot) slot = make_model(kind_, alphabet_);
    return *slot;
}

std::uint64_t ModelBank::state_hash() const {
    std::uint64_t h = 0;
    for (const auto& [ctx, m] : models_) h = hash_combine(hash_combine(h, ctx), m->state_hash());
    return h;
}

double estimate_rate(std::span<const int> symbols, Model& model) {
    double bits = 0.0;
    for (int s : symbols) {
        check_symbol(model, s);
        bits -= std::log2(model.probability(s));
        model.update(s);
    }
    return bits;
}

int SymbolEncoder::code(Model& m, int symbol) {
    check_symbol(m, symbol);
    const Interval iv = m.interval(symbol);
    const std::uint32_t total = m.total();
    rc_.encode(iv.cum, iv.freq, total);
    ideal_bits_ -= std::log2(static_cast<double>(iv.freq) / total);
    m.update(symbol);
    if (trace) trace->push_back(m.state_hash());
    return symbol;
}

int SymbolDecoder::code(Model& m, int) {
    const std::uint32_t total = m.total();
    Interval iv;
    const int s = m.find(rc_.target(total), iv);
    rc_.consume(iv.cum, iv.freq, total);
    m.update(s);
    if (trace) trace->push_back(m.state_hash());
    return s;
}

Bytes encode_symbols(std::span<const int> symbols, Model& model) {
    SymbolEncoder enc;
    for (int s : symbols) enc.code(model, s);
    return enc.finish();
}

std::vector<int> decode_symbols(std::span<const std::uint8_t> bytes, std::size_t count,
                                Model& model) {
    SymbolDecoder dec(bytes);
    std::vector<int> out(count);
    for (auto& s : out) s = dec.code(model);
    return out;
}

}  // namespace teso
