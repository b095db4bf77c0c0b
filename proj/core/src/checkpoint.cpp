#include "darnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "darnet/error.hpp"
#include "darnet/rng.hpp"

namespace darnet {

namespace {

constexpr char kMagic[4] = {'D', 'A', 'R', 'N'};

void put_u32(std::string& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    std::uint32_t u32()
    {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::string take(std::size_t n)
    {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const
    {
        if (bytes_.size() - pos_ < n)
            throw FormatError("checkpoint truncated");
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::string serialize_checkpoint(const std::vector<NamedTensor>& tensors)
{
    std::string out(kMagic, 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& nt : tensors) {
        put_u32(out, static_cast<std::uint32_t>(nt.name.size()));
        out += nt.name;
        put_u32(out, static_cast<std::uint32_t>(nt.tensor.rank()));
        for (int d : nt.tensor.shape())
            put_u32(out, static_cast<std::uint32_t>(d));
        for (float v : nt.tensor.values())
            put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

std::vector<NamedTensor> deserialize_checkpoint(const std::string& bytes)
{
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("bad checkpoint magic (expected \"DARN\")");
    Reader in(bytes);
    in.take(4);
    const std::uint32_t version = in.u32();
    if (version != kCheckpointVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t count = in.u32();
    std::vector<NamedTensor> tensors;
    for (std::uint32_t t = 0; t < count; ++t) {
        NamedTensor nt;
        nt.name = in.take(in.u32());
        const std::uint32_t rank = in.u32();
        if (rank > 8)
            throw FormatError("implausible tensor rank " + std::to_string(rank));
        Shape shape(rank);
        for (auto& d : shape)
            d = static_cast<int>(in.u32());
        std::vector<float> values(shape_size(shape));
        for (float& v : values)
            v = std::bit_cast<float>(in.u32());
        nt.tensor = Tensor<float>(std::move(shape), std::move(values));
        tensors.push_back(std::move(nt));
    }
    if (!in.done())
        throw FormatError("trailing bytes after checkpoint payload");
    return tensors;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors)
{
    const std::string bytes = serialize_checkpoint(tensors);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write checkpoint " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw DataError("write failed: " + path.string());
}

namespace {

std::string slurp(const std::filesystem::path& path, bool checkpoint)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        const std::string msg = "cannot open " + path.string();
        if (checkpoint)
            throw FormatError(msg);
        throw DataError(msg);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path)
{
    try {
        return deserialize_checkpoint(slurp(path, true));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::uint64_t file_checksum(const std::filesystem::path& path)
{
    return hash_string(slurp(path, false));
}

} // namespace darnet
