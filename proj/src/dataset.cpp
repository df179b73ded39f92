#include "maple/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "maple/errors.hpp"
#include "maple/kernels.hpp"

namespace maple {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::vector<ArchId> sample_without_replacement(int n, std::uint64_t seed) {
    std::vector<ArchId> ids = enumerate_architectures();
    std::mt19937_64 rng(splitmix64(seed));
    // partial Fisher-Yates: the first n slots end up uniform without replacement
    for (int i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, ids.size() - 1);
        std::swap(ids[i], ids[pick(rng)]);
    }
    ids.resize(n);
    return ids;
}

// Shortest text form that round-trips the double exactly.
std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double measure_host_latency(ArchId arch, const NetworkSkeleton& skel, int repeats) {
    return run_network(arch, skel, repeats).mean_ms;
}

}  // namespace

std::vector<ArchId> select_training_architectures(int n, std::uint64_t seed) {
    if (n < 1 || static_cast<std::uint32_t>(n) > kNumArchitectures) {
        throw DomainError("training sample count must be in [1, " +
                          std::to_string(kNumArchitectures) + "]");
    }
    return sample_without_replacement(n, splitmix64(seed ^ 0x7261ee5u));
}

std::vector<ArchId> select_adaptation_architectures(int k, std::uint64_t seed) {
    if (k < 1 || static_cast<std::uint32_t>(k) > kNumArchitectures) {
        throw DomainError("adaptation sample count must be in [1, " +
                          std::to_string(kNumArchitectures) + "]");
    }
    return sample_without_replacement(k, splitmix64(seed ^ 0xada9du));
}

SampleSet collect_initial_sim(const std::vector<SimDevice>& devices,
                              const std::vector<ArchId>& archs, const NetworkSkeleton& skel,
                              std::uint64_t seed) {
    SampleSet set;
    set.samples.reserve(devices.size() * archs.size());
    for (const SimDevice& d : devices) {
        set.descriptors.emplace(d.device_id, sim_descriptor(d));
        for (ArchId a : archs) {
            // per-sample noise stream, independent of collection order
            std::mt19937_64 rng(splitmix64(seed ^ splitmix64(d.seed) ^ (std::uint64_t{a} << 24)));
            const double y = sim_latency(d, a, skel, /*noisy=*/true, &rng);
            set.samples.push_back(LatencySample{d.device_id, a, y, 1.0});
        }
    }
    return set;
}

SampleSet collect_adaptation_sim(const SimDevice& device, int k, std::uint64_t seed,
                                 const NetworkSkeleton& skel) {
    SampleSet set;
    set.descriptors.emplace(device.device_id, sim_descriptor(device));
    if (k == 0) return set;
    const auto archs = select_adaptation_architectures(k, seed);
    for (ArchId a : archs) {
        std::mt19937_64 rng(
            splitmix64(seed ^ splitmix64(device.seed ^ 0xadau) ^ (std::uint64_t{a} << 24)));
        const double y = sim_latency(device, a, skel, /*noisy=*/true, &rng);
        set.samples.push_back(LatencySample{device.device_id, a, y, 1.0});
    }
    return set;
}

SampleSet collect_initial_host(const std::string& device_id, const std::vector<ArchId>& archs,
                               const NetworkSkeleton& skel, int repeats, int counter_iterations) {
    SampleSet set;
    set.descriptors.emplace(device_id, build_descriptor(device_id, counter_iterations));
    set.samples.reserve(archs.size());
    for (ArchId a : archs) {
        set.samples.push_back(LatencySample{device_id, a, measure_host_latency(a, skel, repeats), 1.0});
    }
    return set;
}

SampleSet collect_adaptation_host(const std::string& device_id, int k, std::uint64_t seed,
                                  const NetworkSkeleton& skel, int repeats, int counter_iterations) {
    SampleSet set;
    set.descriptors.emplace(device_id, build_descriptor(device_id, counter_iterations));
    if (k == 0) return set;
    for (ArchId a : select_adaptation_architectures(k, seed)) {
        set.samples.push_back(LatencySample{device_id, a, measure_host_latency(a, skel, repeats), 1.0});
    }
    return set;
}

SampleSet build_training_set(const SampleSet& initial, const SampleSet& adaptation) {
    SampleSet out;
    out.descriptors = initial.descriptors;
    for (const auto& [id, desc] : adaptation.descriptors) {
        out.descriptors.emplace(id, desc);
    }

    std::set<std::pair<std::string, ArchId>> adaptation_keys;
    for (const auto& s : adaptation.samples) {
        adaptation_keys.emplace(s.device_id, s.arch);
    }

    const double w_initial =
        initial.samples.empty() ? 0.0 : 1.0 / std::sqrt(static_cast<double>(initial.samples.size()));
    const double w_adapt = adaptation.samples.empty()
                               ? 0.0
                               : 1.0 / std::sqrt(static_cast<double>(adaptation.samples.size()));

    out.samples.reserve(initial.samples.size() + adaptation.samples.size());
    for (const auto& s : initial.samples) {
        if (adaptation_keys.contains({s.device_id, s.arch})) continue;  // adaptation copy wins
        LatencySample copy = s;
        copy.weight = w_initial;
        out.samples.push_back(std::move(copy));
    }
    for (const auto& s : adaptation.samples) {
        LatencySample copy = s;
        copy.weight = w_adapt;
        out.samples.push_back(std::move(copy));
    }
    return out;
}

void save_samples(const SampleSet& set, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "device_id,arch_id,latency_ms,weight\n";
    for (const auto& s : set.samples) {
        out << s.device_id << ',' << s.arch << ',' << format_double(s.latency_ms) << ','
            << format_double(s.weight) << '\n';
    }
}

SampleSet load_samples(const std::filesystem::path& path, const DescriptorMap& descriptors) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");

    SampleSet set;
    std::string line;
    long line_no = 0;

    if (!std::getline(in, line)) throw ParseError("empty sample file", 1);
    ++line_no;
    if (line != "device_id,arch_id,latency_ms,weight") {
        throw ParseError("unexpected header '" + line + "'", line_no);
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::array<std::string, 4> fields;
        std::size_t start = 0;
        for (int f = 0; f < 4; ++f) {
            const std::size_t comma = line.find(',', start);
            if (f < 3) {
                if (comma == std::string::npos) {
                    throw ParseError("expected 4 comma-separated fields", line_no);
                }
                fields[f] = line.substr(start, comma - start);
                start = comma + 1;
            } else {
                if (comma != std::string::npos) {
                    throw ParseError("expected 4 comma-separated fields", line_no);
                }
                fields[f] = line.substr(start);
            }
        }

        LatencySample s;
        s.device_id = fields[0];
        try {
            s.arch = static_cast<ArchId>(std::stoul(fields[1]));
            s.latency_ms = std::stod(fields[2]);
            s.weight = std::stod(fields[3]);
        } catch (const std::exception&) {
            throw ParseError("malformed numeric field", line_no);
        }
        if (s.arch >= kNumArchitectures) {
            throw ParseError("architecture id out of range", line_no);
        }
        if (!(s.latency_ms > 0)) {
            throw ParseError("latency must be positive", line_no);
        }
        if (!(s.weight > 0)) {
            throw ParseError("weight must be positive", line_no);
        }
        set.samples.push_back(std::move(s));
    }

    for (const auto& s : set.samples) {
        const auto it = descriptors.find(s.device_id);
        if (it == descriptors.end()) {
            throw ValidationError("sample references device '" + s.device_id +
                                  "' with no descriptor");
        }
        set.descriptors.emplace(s.device_id, it->second);
    }
    return set;
}

}  // namespace maple
