#pragma once

#include "compabs/abstraction.hpp"

#include <cstdint>
#include <fstream>
#include <functional>
#include <string>

namespace compabs {

inline constexpr char kMdpMagic[8] = {'C', 'P', 'A', 'B', 'S', 'M', 'D', 'P'};
inline constexpr std::uint32_t kMdpVersion = 1;

void save_mdp(const FiniteMDP& mdp, const std::string& path);
FiniteMDP load_mdp(const std::string& path);

/// Writes header and tensor rows incrementally, then the trailing checksum.
class MdpWriter {
public:
    MdpWriter(const std::string& path, const FiniteMDP& shape);
    void write_rows(const double* data, std::size_t count);
    std::uint64_t finish();

private:
    void put(const void* p, std::size_t n);
    std::ofstream out_;
    std::uint64_t hash_;
    std::uint64_t expected_;
    std::uint64_t written_ = 0;
    std::uint64_t bytes_ = 0;
    std::size_t cols_;
};

struct MdpFileInfo {
    FiniteMDP shape;  // partitions and provenance, empty tensor
    std::uint64_t file_bytes = 0;
};

/// Reads the header, streams every row through `visit(row_index, row)` and verifies the checksum.
MdpFileInfo scan_mdp(const std::string& path, const std::function<void(std::uint64_t, const double*)>& visit,
                     const std::function<void(const FiniteMDP&)>& on_header = {});

}  // namespace compabs
