#include "uep/ltcode.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "uep/errors.hpp"

namespace uep {

namespace {

void xor_bytes(uint8_t* dst, const uint8_t* src, size_t n) {
    for (size_t i = 0; i < n; ++i) dst[i] ^= src[i];
}

// Partial Fisher-Yates over a persistent iota pool: selects count distinct
// values from [0, pool.size()), then undoes its swaps so the pool stays iota.
void sample_distinct(std::vector<uint32_t>& pool, uint32_t count, Rng& rng,
                     std::vector<uint32_t>& out) {
    const uint32_t n = static_cast<uint32_t>(pool.size());
    out.resize(count);
    std::vector<uint32_t> picks(count);
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t j = i + rng.next_below(n - i);
        picks[i] = j;
        std::swap(pool[i], pool[j]);
        out[i] = pool[i];
    }
    for (uint32_t i = count; i-- > 0;) std::swap(pool[i], pool[picks[i]]);
    std::sort(out.begin(), out.end());
}

void encode_into(const SourceBlock& block, const DegreeDistribution& dist, Rng& rng,
                 std::vector<uint32_t>& pool, std::vector<uint32_t>& neighbors,
                 std::vector<uint8_t>& payload) {
    const uint32_t k = static_cast<uint32_t>(block.dimension());
    const uint32_t d = std::min(dist.sample(rng), k);
    sample_distinct(pool, d, rng, neighbors);
    payload.assign(block.symbol_size(), 0);
    for (uint32_t idx : neighbors) xor_bytes(payload.data(), block.symbol(idx).data(), payload.size());
}

}  // namespace

SourceBlock::SourceBlock(size_t dimension, size_t symbol_size) : symbol_size_(symbol_size) {
    if (dimension == 0) throw ParameterError("SourceBlock: dimension must be positive");
    if (symbol_size == 0) throw ParameterError("SourceBlock: symbol size must be positive");
    if (dimension > std::numeric_limits<uint32_t>::max())
        throw ParameterError("SourceBlock: dimension exceeds index range");
    data_.assign(dimension * symbol_size, 0);
}

SourceBlock SourceBlock::random(size_t dimension, size_t symbol_size, Rng& rng) {
    SourceBlock block(dimension, symbol_size);
    for (uint8_t& byte : block.data_) byte = static_cast<uint8_t>(rng.next_below(256));
    return block;
}

SymbolStream::SymbolStream(size_t symbol_size) : symbol_size_(symbol_size) {
    if (symbol_size == 0) throw ParameterError("SymbolStream: symbol size must be positive");
}

void SymbolStream::append(uint32_t layer_id, std::span<const uint32_t> neighbors,
                          std::span<const uint8_t> payload) {
    if (payload.size() != symbol_size_) throw ParameterError("SymbolStream: payload size mismatch");
    for (size_t i = 1; i < neighbors.size(); ++i)
        if (neighbors[i] <= neighbors[i - 1])
            throw ParameterError("SymbolStream: neighbors must be strictly ascending");
    layer_ids_.push_back(layer_id);
    neighbor_pool_.insert(neighbor_pool_.end(), neighbors.begin(), neighbors.end());
    offsets_.push_back(neighbor_pool_.size());
    payload_pool_.insert(payload_pool_.end(), payload.begin(), payload.end());
}

void SymbolStream::append(const EncodedSymbol& symbol) {
    append(symbol.layer_id, symbol.neighbors, symbol.payload);
}

EncodedSymbol SymbolStream::symbol(size_t i) const {
    const auto nb = neighbors(i);
    const auto pl = payload(i);
    return {layer_id(i), {nb.begin(), nb.end()}, {pl.begin(), pl.end()}};
}

EncodedSymbol lt_encode_symbol(const SourceBlock& block, const DegreeDistribution& dist, Rng& rng,
                               uint32_t layer_id) {
    std::vector<uint32_t> pool(block.dimension());
    std::iota(pool.begin(), pool.end(), 0u);
    EncodedSymbol symbol;
    symbol.layer_id = layer_id;
    encode_into(block, dist, rng, pool, symbol.neighbors, symbol.payload);
    return symbol;
}

namespace {

std::vector<uint32_t> all_indices(size_t n) {
    std::vector<uint32_t> v(n);
    std::iota(v.begin(), v.end(), 0u);
    return v;
}

void check_subset(const SymbolStream& stream, std::span<const uint32_t> subset, size_t dimension) {
    if (dimension == 0) throw ParameterError("decode: dimension must be positive");
    for (uint32_t s : subset) {
        if (s >= stream.size()) throw ParameterError("decode: symbol index out of range");
        for (uint32_t v : stream.neighbors(s))
            if (v >= dimension) throw ParameterError("decode: neighbor index out of range");
    }
}

DecodeResult peel_core(const SymbolStream& stream, std::span<const uint32_t> subset,
                       size_t dimension) {
    check_subset(stream, subset, dimension);
    const size_t n = subset.size();
    const size_t sym_size = stream.symbol_size();

    // CSR adjacency source -> local symbol ids.
    std::vector<uint32_t> adj_count(dimension, 0);
    for (uint32_t s : subset)
        for (uint32_t v : stream.neighbors(s)) ++adj_count[v];
    std::vector<size_t> adj_off(dimension + 1, 0);
    for (size_t u = 0; u < dimension; ++u) adj_off[u + 1] = adj_off[u] + adj_count[u];
    std::vector<uint32_t> adj(adj_off.back());
    {
        std::vector<size_t> cursor(adj_off.begin(), adj_off.end() - 1);
        for (size_t i = 0; i < n; ++i)
            for (uint32_t v : stream.neighbors(subset[i]))
                adj[cursor[v]++] = static_cast<uint32_t>(i);
    }

    std::vector<uint32_t> unresolved(n);
    std::vector<uint32_t> idx_xor(n, 0);
    std::vector<uint8_t> work(n * sym_size);
    std::vector<uint32_t> queue;
    for (size_t i = 0; i < n; ++i) {
        const auto nb = stream.neighbors(subset[i]);
        unresolved[i] = static_cast<uint32_t>(nb.size());
        for (uint32_t v : nb) idx_xor[i] ^= v;
        const auto pl = stream.payload(subset[i]);
        std::memcpy(work.data() + i * sym_size, pl.data(), sym_size);
        if (unresolved[i] == 1) queue.push_back(static_cast<uint32_t>(i));
        if (unresolved[i] == 0) {
            for (size_t b = 0; b < sym_size; ++b)
                if (pl[b] != 0) throw DataError("peel_decode: degree-0 symbol with nonzero payload");
        }
    }

    SourceBlock block(dimension, sym_size);
    std::vector<uint8_t> resolved(dimension, 0);
    size_t num_recovered = 0;
    while (!queue.empty()) {
        const uint32_t i = queue.back();
        queue.pop_back();
        if (unresolved[i] != 1) continue;  // updated since enqueue
        const uint32_t u = idx_xor[i];
        const uint8_t* value = work.data() + i * sym_size;
        resolved[u] = 1;
        ++num_recovered;
        std::memcpy(block.symbol(u).data(), value, sym_size);
        for (size_t a = adj_off[u]; a < adj_off[u + 1]; ++a) {
            const uint32_t s = adj[a];
            xor_bytes(work.data() + s * sym_size, block.symbol(u).data(), sym_size);
            idx_xor[s] ^= u;
            --unresolved[s];
            if (unresolved[s] == 1) {
                queue.push_back(s);
            } else if (unresolved[s] == 0) {
                const uint8_t* w = work.data() + s * sym_size;
                for (size_t b = 0; b < sym_size; ++b)
                    if (w[b] != 0) throw DataError("peel_decode: inconsistent symbol payloads");
            }
        }
    }

    DecodeResult result;
    result.num_recovered = num_recovered;
    result.success = num_recovered == dimension;
    if (result.success) result.block = std::move(block);
    return result;
}

DecodeResult ml_core(const SymbolStream& stream, std::span<const uint32_t> subset,
                     size_t dimension) {
    check_subset(stream, subset, dimension);
    const size_t n = subset.size();
    const size_t sym_size = stream.symbol_size();
    const size_t words = (dimension + 63) / 64;

    std::vector<uint64_t> rows(n * words, 0);
    std::vector<uint8_t> pay(n * sym_size);
    for (size_t i = 0; i < n; ++i) {
        for (uint32_t v : stream.neighbors(subset[i]))
            rows[i * words + v / 64] |= uint64_t{1} << (v % 64);
        std::memcpy(pay.data() + i * sym_size, stream.payload(subset[i]).data(), sym_size);
    }

    const auto test_bit = [&](size_t r, size_t c) {
        return (rows[r * words + c / 64] >> (c % 64)) & 1u;
    };
    const auto xor_rows = [&](size_t dst, size_t src) {
        for (size_t w = 0; w < words; ++w) rows[dst * words + w] ^= rows[src * words + w];
        xor_bytes(pay.data() + dst * sym_size, pay.data() + src * sym_size, sym_size);
    };

    std::vector<size_t> pivot_of_col(dimension, SIZE_MAX);
    size_t next_row = 0;
    for (size_t c = 0; c < dimension && next_row < n; ++c) {
        size_t pivot = SIZE_MAX;
        for (size_t r = next_row; r < n; ++r)
            if (test_bit(r, c)) {
                pivot = r;
                break;
            }
        if (pivot == SIZE_MAX) continue;
        if (pivot != next_row) {
            for (size_t w = 0; w < words; ++w)
                std::swap(rows[pivot * words + w], rows[next_row * words + w]);
            for (size_t b = 0; b < sym_size; ++b)
                std::swap(pay[pivot * sym_size + b], pay[next_row * sym_size + b]);
        }
        for (size_t r = 0; r < n; ++r)
            if (r != next_row && test_bit(r, c)) xor_rows(r, next_row);
        pivot_of_col[c] = next_row;
        ++next_row;
    }

    // A zero row must carry a zero payload or the stream contradicts itself.
    for (size_t r = next_row; r < n; ++r) {
        bool zero = true;
        for (size_t w = 0; w < words && zero; ++w) zero = rows[r * words + w] == 0;
        if (!zero) continue;
        for (size_t b = 0; b < sym_size; ++b)
            if (pay[r * sym_size + b] != 0) throw DataError("ml_decode: inconsistent symbol payloads");
    }

    DecodeResult result;
    if (next_row >= dimension &&
        std::all_of(pivot_of_col.begin(), pivot_of_col.end(), [](size_t p) { return p != SIZE_MAX; })) {
        SourceBlock block(dimension, sym_size);
        for (size_t c = 0; c < dimension; ++c)
            std::memcpy(block.symbol(c).data(), pay.data() + pivot_of_col[c] * sym_size, sym_size);
        result.success = true;
        result.num_recovered = dimension;
        result.block = std::move(block);
        return result;
    }
    // Under-determined: a pivot row with a single 1 still fixes that source.
    size_t determined = 0;
    for (size_t c = 0; c < dimension; ++c) {
        const size_t r = pivot_of_col[c];
        if (r == SIZE_MAX) continue;
        size_t ones = 0;
        for (size_t w = 0; w < words; ++w) ones += static_cast<size_t>(std::popcount(rows[r * words + w]));
        if (ones == 1) ++determined;
    }
    result.num_recovered = determined;
    return result;
}

}  // namespace

DecodeResult peel_decode(const SymbolStream& stream, size_t dimension) {
    const auto idx = all_indices(stream.size());
    return peel_core(stream, idx, dimension);
}

DecodeResult peel_decode(const SymbolStream& stream, std::span<const uint32_t> subset,
                         size_t dimension) {
    return peel_core(stream, subset, dimension);
}

DecodeResult ml_decode(const SymbolStream& stream, size_t dimension) {
    const auto idx = all_indices(stream.size());
    return ml_core(stream, idx, dimension);
}

DecodeResult ml_decode(const SymbolStream& stream, std::span<const uint32_t> subset,
                       size_t dimension) {
    return ml_core(stream, subset, dimension);
}

EncodeStreamResult uep_encode_stream(const std::vector<SourceBlock>& layers, const LayerPlan& plan,
                                     size_t total_symbols, Rng& rng, SchedulingMode mode) {
    const size_t L = plan.layers.size();
    if (L == 0) throw ParameterError("uep_encode_stream: empty plan");
    if (layers.size() != L) throw ParameterError("uep_encode_stream: layer count mismatch");
    double rho_sum = 0.0;
    const size_t sym_size = layers[0].symbol_size();
    for (size_t l = 0; l < L; ++l) {
        if (layers[l].dimension() != plan.layers[l].dimension)
            throw ParameterError("uep_encode_stream: dimension mismatch at layer " + std::to_string(l));
        if (layers[l].symbol_size() != sym_size)
            throw ParameterError("uep_encode_stream: symbol sizes differ across layers");
        if (!(plan.layers[l].rho >= 0.0))
            throw ParameterError("uep_encode_stream: rho must be nonnegative");
        rho_sum += plan.layers[l].rho;
    }
    if (std::abs(rho_sum - 1.0) > 1e-9)
        throw ParameterError("uep_encode_stream: rho must sum to 1");

    // Emission order per layer.
    std::vector<uint32_t> order(total_symbols);
    std::vector<size_t> counts(L, 0);
    if (mode == SchedulingMode::proportional) {
        // Largest-remainder apportionment of rho * total.
        std::vector<double> exact(L);
        size_t assigned = 0;
        for (size_t l = 0; l < L; ++l) {
            exact[l] = plan.layers[l].rho * static_cast<double>(total_symbols);
            counts[l] = static_cast<size_t>(std::floor(exact[l] + 1e-9));
            assigned += counts[l];
        }
        std::vector<size_t> by_frac(L);
        std::iota(by_frac.begin(), by_frac.end(), size_t{0});
        std::stable_sort(by_frac.begin(), by_frac.end(), [&](size_t x, size_t y) {
            return exact[x] - std::floor(exact[x] + 1e-9) > exact[y] - std::floor(exact[y] + 1e-9);
        });
        for (size_t i = 0; assigned < total_symbols; ++i, ++assigned) ++counts[by_frac[i % L]];
        // Bresenham-style interleave keeps each layer evenly spread.
        std::vector<double> err(L, 0.0);
        for (size_t i = 0; i < total_symbols; ++i) {
            size_t best = 0;
            for (size_t l = 0; l < L; ++l) {
                err[l] += static_cast<double>(counts[l]);
                if (err[l] > err[best]) best = l;
            }
            err[best] -= static_cast<double>(total_symbols);
            order[i] = static_cast<uint32_t>(best);
        }
        // err bookkeeping guarantees the schedule matches counts exactly.
    } else {
        for (size_t i = 0; i < total_symbols; ++i) {
            const double u = rng.next_double();
            double acc = 0.0;
            size_t pick = L - 1;
            for (size_t l = 0; l < L; ++l) {
                acc += plan.layers[l].rho;
                if (u < acc) {
                    pick = l;
                    break;
                }
            }
            order[i] = static_cast<uint32_t>(pick);
            ++counts[pick];
        }
    }

    std::vector<std::vector<uint32_t>> pools(L);
    for (size_t l = 0; l < L; ++l) {
        pools[l].resize(layers[l].dimension());
        std::iota(pools[l].begin(), pools[l].end(), 0u);
    }
    EncodeStreamResult result{SymbolStream(sym_size), std::move(counts)};
    std::vector<uint32_t> neighbors;
    std::vector<uint8_t> payload;
    for (size_t i = 0; i < total_symbols; ++i) {
        const uint32_t l = order[i];
        encode_into(layers[l], plan.layers[l].degree, rng, pools[l], neighbors, payload);
        result.stream.append(l, neighbors, payload);
    }
    return result;
}

UepDecodeResult uep_decode(const SymbolStream& stream, std::span<const size_t> dimensions,
                           DecoderKind decoder) {
    const auto idx = all_indices(stream.size());
    return uep_decode(stream, idx, dimensions, decoder);
}

UepDecodeResult uep_decode(const SymbolStream& stream, std::span<const uint32_t> subset,
                           std::span<const size_t> dimensions, DecoderKind decoder) {
    const size_t L = dimensions.size();
    std::vector<std::vector<uint32_t>> per_layer(L);
    for (uint32_t s : subset) {
        if (s >= stream.size()) throw ParameterError("uep_decode: symbol index out of range");
        const uint32_t l = stream.layer_id(s);
        if (l >= L) throw ParameterError("uep_decode: layer id out of range");
        per_layer[l].push_back(s);
    }
    UepDecodeResult result;
    result.per_layer.reserve(L);
    for (size_t l = 0; l < L; ++l) {
        result.per_layer.push_back(decoder == DecoderKind::peel
                                       ? peel_decode(stream, per_layer[l], dimensions[l])
                                       : ml_decode(stream, per_layer[l], dimensions[l]));
    }
    return result;
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
    uint8_t bytes[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<uint8_t>(value >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    uint8_t bytes[sizeof(T)];
    in.read(reinterpret_cast<char*>(bytes), sizeof(T));
    if (!in) throw DataError("symbol stream: truncated input");
    T value = 0;
    for (size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[i]) << (8 * i);
    return value;
}

}  // namespace

void write_stream(std::ostream& out, const SymbolStream& stream) {
    put_le<uint32_t>(out, static_cast<uint32_t>(stream.size()));
    put_le<uint32_t>(out, static_cast<uint32_t>(stream.symbol_size()));
    for (size_t i = 0; i < stream.size(); ++i) {
        const uint32_t layer = stream.layer_id(i);
        if (layer > UINT16_MAX) throw ParameterError("write_stream: layer id exceeds u16");
        put_le<uint16_t>(out, static_cast<uint16_t>(layer));
        const auto nb = stream.neighbors(i);
        put_le<uint32_t>(out, static_cast<uint32_t>(nb.size()));
        for (uint32_t v : nb) put_le<uint32_t>(out, v);
        const auto pl = stream.payload(i);
        out.write(reinterpret_cast<const char*>(pl.data()), static_cast<std::streamsize>(pl.size()));
    }
    if (!out) throw IoError("write_stream: write failed");
}

SymbolStream read_stream(std::istream& in) {
    const uint32_t count = get_le<uint32_t>(in);
    const uint32_t sym_size = get_le<uint32_t>(in);
    if (sym_size == 0) throw DataError("symbol stream: zero symbol size");
    SymbolStream stream(sym_size);
    std::vector<uint32_t> neighbors;
    std::vector<uint8_t> payload(sym_size);
    for (uint32_t i = 0; i < count; ++i) {
        const uint16_t layer = get_le<uint16_t>(in);
        const uint32_t deg = get_le<uint32_t>(in);
        neighbors.resize(deg);
        for (uint32_t d = 0; d < deg; ++d) neighbors[d] = get_le<uint32_t>(in);
        in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(sym_size));
        if (!in) throw DataError("symbol stream: truncated input");
        for (size_t d = 1; d < neighbors.size(); ++d)
            if (neighbors[d] <= neighbors[d - 1])
                throw DataError("symbol stream: neighbors not strictly ascending");
        stream.append(layer, neighbors, payload);
    }
    return stream;
}

void write_stream_file(const std::string& path, const SymbolStream& stream) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    write_stream(out, stream);
}

SymbolStream read_stream_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    return read_stream(in);
}

}  // namespace uep
