// Copyright 2026 The TeSO Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "teso/core/bytes.hpp"
#include "teso/core/container.hpp"
#include "teso/geocodec/range_coder.hpp"

namespace teso {

struct Interval {
    std::uint32_t cum = 0;
    std::uint32_t freq = 0;
};

/// Categorical distribution over [0, size()) expressed as integer
/// frequencies. Every symbol has frequency >= 1 and total() <= 2^16.
class Model {
public:
    virtual ~Model() = default;

    virtual int size() const = 0;
    virtual std::uint32_t total() const = 0;
    virtual Interval interval(int symbol) const = 0;
    /// Symbol whose interval contains target; writes that interval.
    virtual int find(std::uint32_t target, Interval& out) const = 0;
    virtual void update(int symbol) = 0;
    /// Hash of the full adaptive state, for encoder/decoder lockstep checks.
    virtual std::uint64_t state_hash() const = 0;
    virtual std::unique_ptr<Model> clone() const = 0;

    double probability(int symbol) const {
        return static_cast<double>(interval(symbol).freq) / total();
    }
};

/// Every symbol equally likely; never adapts.
class UniformModel final : public Model {
public:
    explicit UniformModel(int size);
    int size() const override { return size_; }
    std::uint32_t total() const override { return static_cast<std::uint32_t>(size_); }
    Interval interval(int s) const override { return {static_cast<std::uint32_t>(s), 1}; }
    int find(std::uint32_t target, Interval& out) const override;
    void update(int) override {}
    std::uint64_t state_hash() const override;
    std::unique_ptr<Model> clone() const override { return std::make_unique<UniformModel>(*this); }

private:
    int size_;
};

/// Fixed frequency table.
class StaticModel final : public Model {
public:
    explicit StaticModel(std::vector<std::uint32_t> freqs);
    /// Scales probabilities to a 2^16 total, keeping every frequency >= 1.
    static StaticModel from_probabilities(std::span<const double> p);

    int size() const override { return static_cast<int>(freqs_.size()); }
    std::uint32_t total() const override { return cum_.back(); }
    Interval interval(int s) const override { return {cum_[s], freqs_[s]}; }
    int find(std::uint32_t target, Interval& out) const override;
    void update(int) override {}
    std::uint64_t state_hash() const override;
    std::unique_ptr<Model> clone() const override { return std::make_unique<StaticModel>(*this); }

private:
    std::vector<std::uint32_t> freqs_;
    std::vector<std::uint32_t> cum_;  // size + 1 entries
};

/// Binary model with a 16-bit probability of zero, moved 1/32 of the way
/// toward each coded bit.
class AdaptiveBinaryModel final : public Model {
public:
    static constexpr int kRateShift = 5;

    int size() const override { return 2; }
    std::uint32_t total() const override { return kMaxTotalFrequency; }
    Interval interval(int s) const override {
        return s == 0 ? Interval{0, p0_} : Interval{p0_, kMaxTotalFrequency - p0_};
    }
    int find(std::uint32_t target, Interval& out) const override {
        const int s = target < p0_ ? 0 : 1;
        out = interval(s);
        return s;
    }
    void update(int s) override {
        if (s == 0) p0_ += (kMaxTotalFrequency - p0_) >> kRateShift;
        else p0_ -= p0_ >> kRateShift;
    }
    std::uint64_t state_hash() const override { return p0_; }
    std::unique_ptr<Model> clone() const override {
        return std::make_unique<AdaptiveBinaryModel>(*this);
    }

private:
    std::uint32_t p0_ = kMaxTotalFrequency / 2;
};

/// Frequency-count model. Starts uniform; each coded symbol gains
/// kIncrement and all counts are halved once the total would exceed 2^16,
/// so old statistics decay geometrically.
class AdaptiveCategoricalModel final : public Model {
public:
    static constexpr std::uint32_t kIncrement = 32;
    static constexpr int kMaxSize = 1 << 15;

    explicit AdaptiveCategoricalModel(int size);
    int size() const override { return static_cast<int>(freqs_.size()); }
    std::uint32_t total() const override { return total_; }
    Interval interval(int s) const override;
    int find(std::uint32_t target, Interval& out) const override;
    void update(int s) override;
    std::uint64_t state_hash() const override;
    std::unique_ptr<Model> clone() const override {
        return std::make_unique<AdaptiveCategoricalModel>(*this);
    }

private:
    std::vector<std::uint32_t> freqs_;
    std::uint32_t total_ = 0;
};

/// Model family for geometry streams: adaptive (binary or categorical by
/// alphabet size) or uniform.
std::unique_ptr<Model> make_model(GeometryModelId kind, int alphabet);

/// Lazily created models keyed by context index, all over one alphabet.
class ModelBank {
public:
    ModelBank(GeometryModelId kind, int alphabet) : kind_(kind), alphabet_(alphabet) {}
    Model& at(std::uint32_t context);
    std::uint64_t state_hash() const;

private:
    GeometryModelId kind_;
    int alphabet_;
    std::map<std::uint32_t, std::unique_ptr<Model>> models_;
};

/// Cross-entropy of a symbol sequence in bits: sum of -log2 p(symbol)
/// under the model, updated after every symbol as a coder would.
double estimate_rate(std::span<const int> symbols, Model& model);

/// Codes symbols one at a time and updates the model after each.
/// Optionally accumulates the ideal code length and records model hashes.
class SymbolEncoder {
public:
    static constexpr bool kEncoding = true;

    int code(Model& m, int symbol);
    Bytes finish() { return rc_.finish(); }
    double ideal_bits() const noexcept { return ideal_bits_; }
    std::vector<std::uint64_t>* trace = nullptr;

private:
    RangeEncoder rc_;
    double ideal_bits_ = 0.0;
};

class SymbolDecoder {
public:
    static constexpr bool kEncoding = false;

    explicit SymbolDecoder(std::span<const std::uint8_t> bytes) : rc_(bytes) {}
    /// The second argument is ignored; it mirrors SymbolEncoder::code.
    int code(Model& m, int = 0);
    std::vector<std::uint64_t>* trace = nullptr;

private:
    RangeDecoder rc_;
};

Bytes encode_symbols(std::span<const int> symbols, Model& model);
/// Throws StreamError on underrun.
std::vector<int> decode_symbols(std::span<const std::uint8_t> bytes, std::size_t count,
                                Model& model);

}  // namespace teso
