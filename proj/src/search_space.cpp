#include "maple/search_space.hpp"

#include <algorithm>
#include <numeric>

#include "maple/errors.hpp"

namespace maple {

namespace {

constexpr std::array<std::string_view, kNumOpKinds> kOpNames{"none", "skip", "conv1x1", "conv3x3",
                                                             "avgpool3x3"};

void check_arch_id(ArchId arch) {
    if (arch >= kNumArchitectures) {
        throw DomainError("architecture id " + std::to_string(arch) + " out of range [0, " +
                          std::to_string(kNumArchitectures - 1) + "]");
    }
}

}  // namespace

std::string_view op_kind_name(OpKind kind) { return kOpNames[static_cast<int>(kind)]; }

bool op_is_conv(OpKind kind) { return kind == OpKind::Conv1x1 || kind == OpKind::Conv3x3; }

const std::array<OperatorWorkload, kNumWorkloads>& operator_workloads() {
    static const std::array<OperatorWorkload, kNumWorkloads> table = [] {
        std::array<OperatorWorkload, kNumWorkloads> t{};
        int i = 0;
        for (int k = 0; k < kNumOpKinds; ++k) {
            for (int w : kChannelWidths) {
                t[i++] = OperatorWorkload{static_cast<OpKind>(k), w};
            }
        }
        return t;
    }();
    return table;
}

int workload_index(OpKind kind, int width) {
    for (int wi = 0; wi < 3; ++wi) {
        if (kChannelWidths[wi] == width) {
            return static_cast<int>(kind) * 3 + wi;
        }
    }
    throw DomainError("unsupported channel width " + std::to_string(width));
}

std::string workload_name(const OperatorWorkload& w) {
    return std::string(op_kind_name(w.kind)) + "_w" + std::to_string(w.width);
}

OperatorWorkload workload_from_name(std::string_view name) {
    for (const auto& w : operator_workloads()) {
        if (workload_name(w) == name) {
            return w;
        }
    }
    throw DomainError("unknown workload name '" + std::string(name) + "'");
}

std::vector<ArchId> enumerate_architectures() {
    std::vector<ArchId> ids(kNumArchitectures);
    std::iota(ids.begin(), ids.end(), ArchId{0});
    return ids;
}

std::array<OpKind, kNumEdges> edge_ops(ArchId arch) {
    check_arch_id(arch);
    std::array<OpKind, kNumEdges> ops{};
    for (int e = 0; e < kNumEdges; ++e) {
        ops[e] = static_cast<OpKind>(arch % 5);
        arch /= 5;
    }
    return ops;
}

ArchId arch_from_edge_ops(const std::array<OpKind, kNumEdges>& ops) {
    ArchId arch = 0;
    for (int e = kNumEdges - 1; e >= 0; --e) {
        arch = arch * 5 + static_cast<ArchId>(ops[e]);
    }
    return arch;
}

std::string ArchEncoding::to_string() const {
    std::string s(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) s[i] = '1';
    }
    return s;
}

ArchEncoding ArchEncoding::from_string(std::string_view s) {
    ArchEncoding enc;
    if (s.size() != enc.bits.size()) {
        throw EncodingError("encoding string must have length " + std::to_string(enc.bits.size()));
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '0' && s[i] != '1') {
            throw EncodingError("encoding string may contain only '0'/'1'");
        }
        enc.bits[i] = s[i] == '1' ? 1 : 0;
    }
    return enc;
}

ArchEncoding encode(ArchId arch) {
    const auto ops = edge_ops(arch);  // validates range
    ArchEncoding enc;
    for (int e = 0; e < kNumEdges; ++e) {
        enc.bits[e * kNumOpKinds + static_cast<int>(ops[e])] = 1;
    }
    return enc;
}

ArchId decode(const ArchEncoding& enc) {
    std::array<OpKind, kNumEdges> ops{};
    for (int e = 0; e < kNumEdges; ++e) {
        int hot = -1;
        int row_sum = 0;
        for (int k = 0; k < kNumOpKinds; ++k) {
            if (enc.at(e, k)) {
                ++row_sum;
                hot = k;
            }
        }
        if (row_sum != 1) {
            throw EncodingError("row " + std::to_string(e) + " is not one-hot (sum " +
                                std::to_string(row_sum) + ")");
        }
        ops[e] = static_cast<OpKind>(hot);
    }
    return arch_from_edge_ops(ops);
}

namespace {

std::uint64_t conv_flops(int kernel, std::uint64_t c_in, std::uint64_t c_out, std::uint64_t h_out,
                         std::uint64_t w_out) {
    return 2ull * kernel * kernel * c_in * c_out * h_out * w_out;
}

std::uint64_t edge_flops(OpKind kind, std::uint64_t width, std::uint64_t h, std::uint64_t w) {
    switch (kind) {
        case OpKind::Conv1x1:
            return conv_flops(1, width, width, h, w);
        case OpKind::Conv3x3:
            return conv_flops(3, width, width, h, w);
        default:
            return 0;
    }
}

}  // namespace

std::uint64_t cell_flops(ArchId arch, const NetworkSkeleton& skel) {
    const auto ops = edge_ops(arch);
    std::uint64_t total = 0;
    std::uint64_t h = skel.input_height;
    std::uint64_t w = skel.input_width;
    for (std::size_t s = 0; s < skel.stage_widths.size(); ++s) {
        if (s > 0) {  // stride-2 pool before each later stage
            h /= 2;
            w /= 2;
        }
        std::uint64_t stage_cell = 0;
        for (int e = 0; e < kNumEdges; ++e) {
            stage_cell += edge_flops(ops[e], skel.stage_widths[s], h, w);
        }
        total += stage_cell * skel.cells_per_stage;
    }
    return total;
}

std::uint64_t flops(ArchId arch, const NetworkSkeleton& skel) {
    std::uint64_t total = cell_flops(arch, skel);

    std::uint64_t h = skel.input_height;
    std::uint64_t w = skel.input_width;
    // stem conv3x3: input channels -> first stage width, same spatial size
    total += conv_flops(3, skel.input_channels, skel.stage_widths[0], h, w);
    // reductions: pool halves the map, then conv1x1 doubles the width
    for (std::size_t s = 1; s < skel.stage_widths.size(); ++s) {
        h /= 2;
        w /= 2;
        total += conv_flops(1, skel.stage_widths[s - 1], skel.stage_widths[s], h, w);
    }
    // head: global average pool (0) + linear map
    total += 2ull * skel.stage_widths.back() * skel.num_classes;
    return total;
}

int adjacent_conv_pairs(ArchId arch) {
    const auto ops = edge_ops(arch);
    int pairs = 0;
    for (int e1 = 0; e1 < kNumEdges; ++e1) {
        if (!op_is_conv(ops[e1])) continue;
        for (int e2 = 0; e2 < kNumEdges; ++e2) {
            if (kEdgeHead[e1] == kEdgeTail[e2] && op_is_conv(ops[e2])) {
                ++pairs;
            }
        }
    }
    return pairs;
}

}  // namespace maple
