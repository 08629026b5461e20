#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uep/degree.hpp"
#include "uep/rng.hpp"

namespace uep {

// Fixed-size source symbols stored back to back.
class SourceBlock {
  public:
    SourceBlock(size_t dimension, size_t symbol_size);
    static SourceBlock random(size_t dimension, size_t symbol_size, Rng& rng);

    size_t dimension() const { return symbol_size_ == 0 ? 0 : data_.size() / symbol_size_; }
    size_t symbol_size() const { return symbol_size_; }
    std::span<uint8_t> symbol(size_t i) { return {data_.data() + i * symbol_size_, symbol_size_}; }
    std::span<const uint8_t> symbol(size_t i) const {
        return {data_.data() + i * symbol_size_, symbol_size_};
    }
    bool operator==(const SourceBlock&) const = default;

  private:
    size_t symbol_size_;
    std::vector<uint8_t> data_;
};

// One rateless output symbol: XOR of the listed source symbols of one layer.
// Neighbor indices are within-layer, strictly ascending.
struct EncodedSymbol {
    uint32_t layer_id = 0;
    std::vector<uint32_t> neighbors;
    std::vector<uint8_t> payload;
    bool operator==(const EncodedSymbol&) const = default;
};

// Flat container for long symbol streams (one allocation class per field
// instead of per symbol).
class SymbolStream {
  public:
    explicit SymbolStream(size_t symbol_size);

    size_t size() const { return layer_ids_.size(); }
    size_t symbol_size() const { return symbol_size_; }
    uint32_t layer_id(size_t i) const { return layer_ids_[i]; }
    std::span<const uint32_t> neighbors(size_t i) const {
        return {neighbor_pool_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }
    std::span<const uint8_t> payload(size_t i) const {
        return {payload_pool_.data() + i * symbol_size_, symbol_size_};
    }

    // Neighbors must be strictly ascending and the payload exactly
    // symbol_size bytes.
    void append(uint32_t layer_id, std::span<const uint32_t> neighbors,
                std::span<const uint8_t> payload);
    void append(const EncodedSymbol& symbol);
    EncodedSymbol symbol(size_t i) const;

    bool operator==(const SymbolStream&) const = default;

  private:
    size_t symbol_size_;
    std::vector<uint32_t> layer_ids_;
    std::vector<size_t> offsets_{0};
    std::vector<uint32_t> neighbor_pool_;
    std::vector<uint8_t> payload_pool_;
};

// Draws a degree, picks that many distinct source indices uniformly, XORs
// them.  Degrees above the block dimension are clamped to it.
EncodedSymbol lt_encode_symbol(const SourceBlock& block, const DegreeDistribution& dist, Rng& rng,
                               uint32_t layer_id = 0);

struct DecodeResult {
    bool success = false;
    size_t num_recovered = 0;
    std::optional<SourceBlock> block;
};

// Iterative peeling: repeatedly resolve symbols with one unknown neighbor.
// Symbols whose neighbors all resolve must XOR to zero; anything else means
// the stream is corrupt and raises DataError.
DecodeResult peel_decode(const SymbolStream& stream, size_t dimension);
DecodeResult peel_decode(const SymbolStream& stream, std::span<const uint32_t> subset,
                         size_t dimension);

// Gauss-Jordan elimination over GF(2).  Succeeds iff the neighbor matrix has
// full column rank; on failure num_recovered counts the uniquely determined
// symbols.  Inconsistent zero rows raise DataError.
DecodeResult ml_decode(const SymbolStream& stream, size_t dimension);
DecodeResult ml_decode(const SymbolStream& stream, std::span<const uint32_t> subset,
                       size_t dimension);

enum class SchedulingMode { proportional, iid };
enum class DecoderKind { peel, ml };

// Per-layer code parameters: dimension, output degree distribution, and the
// share rho of the transmitted stream.
struct LayerPlan {
    struct Layer {
        size_t dimension;
        DegreeDistribution degree;
        double rho;
    };
    std::vector<Layer> layers;
};

struct EncodeStreamResult {
    SymbolStream stream;
    std::vector<size_t> layer_counts;
};

// Emits total_symbols symbols across layers.  proportional: exact per-layer
// counts by largest-remainder apportionment of rho * total, interleaved
// evenly.  iid: each symbol picks its layer independently with probability
// rho_l.
EncodeStreamResult uep_encode_stream(const std::vector<SourceBlock>& layers, const LayerPlan& plan,
                                     size_t total_symbols, Rng& rng,
                                     SchedulingMode mode = SchedulingMode::proportional);

struct UepDecodeResult {
    std::vector<DecodeResult> per_layer;
};

// Partitions the stream by layer_id and decodes each layer on its own.
UepDecodeResult uep_decode(const SymbolStream& stream, std::span<const size_t> dimensions,
                           DecoderKind decoder);
UepDecodeResult uep_decode(const SymbolStream& stream, std::span<const uint32_t> subset,
                           std::span<const size_t> dimensions, DecoderKind decoder);

// Binary dump: little-endian header (u32 symbol count, u32 symbol size)
// followed per symbol by u16 layer_id, u32 neighbor count, the u32 neighbor
// indices, and the payload bytes.
void write_stream(std::ostream& out, const SymbolStream& stream);
SymbolStream read_stream(std::istream& in);
void write_stream_file(const std::string& path, const SymbolStream& stream);
SymbolStream read_stream_file(const std::string& path);

}  // namespace uep
