#include "compabs/mdp_io.hpp"

#include "compabs/error.hpp"
#include "compabs/hash.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <vector>

namespace compabs {

namespace {

static_assert(sizeof(double) == 8);

template <class T>
T to_le(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

class HeaderBuilder {
public:
    template <class T>
    void put(T v) {
        v = to_le(v);
        const auto* p = reinterpret_cast<const char*>(&v);
        bytes_.append(p, sizeof(T));
    }
    void raw(const char* p, std::size_t n) { bytes_.append(p, n); }
    const std::string& bytes() const { return bytes_; }

private:
    std::string bytes_;
};

void put_partition(HeaderBuilder& h, const Partition& p) {
    h.put<std::uint32_t>(static_cast<std::uint32_t>(p.dim()));
    for (int d = 0; d < p.dim(); ++d) {
        h.put<double>(p.box.lower[d]);
        h.put<double>(p.box.upper[d]);
        h.put<std::uint64_t>(p.cells_per_dim[d]);
    }
}

std::string encode_header(const FiniteMDP& m) {
    HeaderBuilder h;
    h.raw(kMdpMagic, sizeof kMdpMagic);
    h.put<std::uint32_t>(kMdpVersion);
    h.put<std::uint32_t>(0);
    h.put<std::uint64_t>(m.n_x());
    h.put<std::uint64_t>(m.n_nu());
    h.put<std::uint64_t>(m.n_w());
    put_partition(h, m.states);
    put_partition(h, m.ext_inputs);
    put_partition(h, m.int_inputs);
    const auto& pv = m.provenance;
    h.put<std::uint64_t>(pv.source_hash);
    h.put<double>(pv.delta);
    h.put<double>(pv.beta);
    h.put<double>(pv.theta);
    h.put<std::uint32_t>(pv.steps);
    h.put<std::uint32_t>(static_cast<std::uint32_t>(pv.sigma.size()));
    for (Eigen::Index i = 0; i < pv.sigma.size(); ++i) h.put<double>(pv.sigma[i]);
    h.put<std::uint64_t>(m.rows());
    h.put<std::uint64_t>(m.cols());
    return h.bytes();
}

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw FormatError("cannot open " + path);
    }
    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) throw ChecksumError("file truncated");
        hash_ = fnv1a64(p, n, hash_);
        consumed_ += n;
    }
    template <class T>
    T get() {
        T v;
        raw(&v, sizeof v);
        return to_le(v);
    }
    std::uint64_t hash() const { return hash_; }
    std::uint64_t consumed() const { return consumed_; }
    std::ifstream& stream() { return in_; }

private:
    std::ifstream in_;
    std::uint64_t hash_ = kFnvOffset;
    std::uint64_t consumed_ = 0;
};

Partition get_partition(Reader& r) {
    auto dim = r.get<std::uint32_t>();
    if (dim > 64) throw FormatError("corrupt header: partition dimension");
    Vector lo(dim), hi(dim);
    std::vector<std::size_t> counts(dim);
    for (std::uint32_t d = 0; d < dim; ++d) {
        lo[d] = r.get<double>();
        hi[d] = r.get<double>();
        counts[d] = r.get<std::uint64_t>();
    }
    try {
        return build_partition(IntervalBox(lo, hi), counts);
    } catch (const Error& e) {
        throw FormatError(std::string("corrupt header: ") + e.what());
    }
}

void write_doubles(std::ofstream& out, std::uint64_t& hash, const double* data, std::size_t n) {
    const char* p = reinterpret_cast<const char*>(data);
    std::vector<double> swapped;
    if constexpr (std::endian::native == std::endian::big) {
        swapped.assign(data, data + n);
        for (auto& v : swapped) v = to_le(v);
        p = reinterpret_cast<const char*>(swapped.data());
    }
    out.write(p, static_cast<std::streamsize>(n * sizeof(double)));
    hash = fnv1a64(p, n * sizeof(double), hash);
}

}  // namespace

MdpWriter::MdpWriter(const std::string& path, const FiniteMDP& shape)
    : out_(path, std::ios::binary | std::ios::trunc), hash_(kFnvOffset), expected_(shape.rows()), cols_(shape.cols()) {
    if (!out_) throw Error("cannot write " + path);
    auto h = encode_header(shape);
    put(h.data(), h.size());
}

void MdpWriter::put(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    hash_ = fnv1a64(p, n, hash_);
    bytes_ += n;
}

void MdpWriter::write_rows(const double* data, std::size_t count) {
    if (written_ + count > expected_) throw Error("MdpWriter: too many rows");
    write_doubles(out_, hash_, data, count * cols_);
    written_ += count;
    bytes_ += count * cols_ * sizeof(double);
}

std::uint64_t MdpWriter::finish() {
    if (written_ != expected_) throw Error("MdpWriter: row count does not match the header");
    std::uint64_t c = to_le(hash_);
    out_.write(reinterpret_cast<const char*>(&c), sizeof c);
    bytes_ += sizeof c;
    out_.flush();
    if (!out_) throw Error("MdpWriter: write failed");
    out_.close();
    return bytes_;
}

void save_mdp(const FiniteMDP& mdp, const std::string& path) {
    if (mdp.T.size() != mdp.rows() * mdp.cols()) throw DimensionError("save_mdp: tensor size does not match the shape");
    MdpWriter w(path, mdp);
    w.write_rows(mdp.T.data(), mdp.rows());
    w.finish();
}

MdpFileInfo scan_mdp(const std::string& path, const std::function<void(std::uint64_t, const double*)>& visit,
                     const std::function<void(const FiniteMDP&)>& on_header) {
    Reader r(path);
    char magic[8];
    try {
        r.raw(magic, sizeof magic);
    } catch (const ChecksumError&) {
        throw FormatError("corrupt header: file too short");
    }
    if (std::memcmp(magic, kMdpMagic, sizeof magic) != 0) throw FormatError("corrupt header: bad magic bytes");
    auto version = r.get<std::uint32_t>();
    if (version != kMdpVersion)
        throw VersionError("unsupported MDP format version " + std::to_string(version) + " (expected " +
                           std::to_string(kMdpVersion) + ")");
    r.get<std::uint32_t>();
    MdpFileInfo info;
    auto nx = r.get<std::uint64_t>(), nnu = r.get<std::uint64_t>(), nw = r.get<std::uint64_t>();
    auto& m = info.shape;
    m.states = get_partition(r);
    m.ext_inputs = get_partition(r);
    m.int_inputs = get_partition(r);
    if (m.n_x() != nx || m.n_nu() != nnu || m.n_w() != nw) throw FormatError("corrupt header: dims disagree with partitions");
    m.provenance.source_hash = r.get<std::uint64_t>();
    m.provenance.delta = r.get<double>();
    m.provenance.beta = r.get<double>();
    m.provenance.theta = r.get<double>();
    m.provenance.steps = r.get<std::uint32_t>();
    auto ns = r.get<std::uint32_t>();
    if (ns > 4096) throw FormatError("corrupt header: sigma length");
    m.provenance.sigma = Vector(ns);
    for (std::uint32_t i = 0; i < ns; ++i) m.provenance.sigma[i] = r.get<double>();
    auto rows = r.get<std::uint64_t>(), cols = r.get<std::uint64_t>();
    if (rows != m.rows() || cols != m.cols()) throw FormatError("corrupt header: tensor shape");

    const std::uint64_t expected = r.consumed() + rows * cols * sizeof(double) + sizeof(std::uint64_t);
    info.file_bytes = std::filesystem::file_size(path);
    if (info.file_bytes != expected) throw ChecksumError("checksum error: file size does not match header (truncated?)");
    if (on_header) on_header(m);

    const std::size_t block = std::max<std::size_t>(1, (std::size_t{1} << 22) / cols);
    std::vector<double> buf(block * cols);
    for (std::uint64_t start = 0; start < rows; start += block) {
        std::size_t count = static_cast<std::size_t>(std::min<std::uint64_t>(block, rows - start));
        r.raw(buf.data(), count * cols * sizeof(double));
        if constexpr (std::endian::native == std::endian::big)
            for (std::size_t i = 0; i < count * cols; ++i) buf[i] = to_le(buf[i]);
        for (std::size_t i = 0; i < count; ++i) visit(start + i, buf.data() + i * cols);
    }
    const std::uint64_t computed = r.hash();
    std::uint64_t stored;
    r.stream().read(reinterpret_cast<char*>(&stored), sizeof stored);
    if (r.stream().gcount() != sizeof stored) throw ChecksumError("checksum error: checksum missing");
    if (to_le(stored) != computed) throw ChecksumError("checksum error: stored checksum does not match contents");
    return info;
}

FiniteMDP load_mdp(const std::string& path) {
    FiniteMDP out;
    std::size_t cols = 0;
    auto info = scan_mdp(
        path, [&](std::uint64_t r, const double* row) { std::copy(row, row + cols, out.T.data() + r * cols); },
        [&](const FiniteMDP& shape) {
            out = shape;
            cols = shape.cols();
            out.T.assign(shape.rows() * cols, 0.0);
        });
    (void)info;
    return out;
}

}  // namespace compabs
