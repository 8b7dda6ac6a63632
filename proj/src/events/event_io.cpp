#include "evdvsr/event_io.hpp"

#include "evdvsr/error.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace evdvsr::events {

namespace {

constexpr char kMagic[] = "EVDV1\n";

template <typename T>
void put_le(std::ostream& out, T value) {
    std::array<char, sizeof(T)> bytes{};
    auto u = static_cast<std::make_unsigned_t<T>>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((u >> (8 * i)) & 0xFF);
    out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(const unsigned char* p) {
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(p[i]) << (8 * i);
    return static_cast<T>(u);
}

}  // namespace

void write_events_binary(std::ostream& out, const EventStream& stream) {
    stream.validate();
    if (stream.width > 0xFFFF || stream.height > 0xFFFF) throw InvalidInput("event file: geometry exceeds uint16");
    if (stream.t_max - stream.t_min > std::numeric_limits<std::uint32_t>::max())
        throw InvalidInput("event file: time span exceeds the 32-bit offset range");
    std::array<char, 16> magic{};
    std::memcpy(magic.data(), kMagic, sizeof(kMagic) - 1);
    out.write(magic.data(), magic.size());
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(stream.width));
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(stream.height));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(stream.t_min));
    for (const Event& e : stream.events) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.t - stream.t_min));
        put_le<std::uint16_t>(out, e.x);
        put_le<std::uint16_t>(out, e.y);
        put_le<std::int8_t>(out, e.p);
    }
    if (!out) throw DataError("event file: write failed");
}

EventStream read_events_binary(std::istream& in) {
    std::array<unsigned char, kEventHeaderSize> header{};
    if (!in.read(reinterpret_cast<char*>(header.data()), header.size()))
        throw DataError("event file: truncated header");
    if (std::memcmp(header.data(), kMagic, sizeof(kMagic) - 1) != 0) throw DataError("event file: bad magic");
    for (std::size_t i = sizeof(kMagic) - 1; i < 16; ++i)
        if (header[i] != 0) throw DataError("event file: bad magic padding");
    EventStream stream;
    stream.width = get_le<std::uint16_t>(header.data() + 16);
    stream.height = get_le<std::uint16_t>(header.data() + 18);
    stream.t_min = static_cast<std::int64_t>(get_le<std::uint64_t>(header.data() + 20));
    stream.t_max = stream.t_min;

    std::array<unsigned char, kEventRecordSize> rec{};
    while (in.read(reinterpret_cast<char*>(rec.data()), rec.size())) {
        Event e;
        e.t = stream.t_min + get_le<std::uint32_t>(rec.data());
        e.x = get_le<std::uint16_t>(rec.data() + 4);
        e.y = get_le<std::uint16_t>(rec.data() + 6);
        e.p = get_le<std::int8_t>(rec.data() + 8);
        stream.events.push_back(e);
        stream.t_max = std::max(stream.t_max, e.t);
    }
    if (in.gcount() != 0) throw DataError("event file: truncated record");
    try {
        stream.validate();
    } catch (const InvalidInput& err) {
        throw DataError(std::string("event file: ") + err.what());
    }
    return stream;
}

void save_events(const std::filesystem::path& path, const EventStream& stream) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    if (path.extension() == ".csv") write_events_csv(out, stream);
    else write_events_binary(out, stream);
}

EventStream load_events(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open event file " + path.string());
    if (path.extension() == ".csv") return read_events_csv(in);
    return read_events_binary(in);
}

void write_events_csv(std::ostream& out, const EventStream& stream) {
    stream.validate();
    out << "# " << stream.width << ' ' << stream.height << ' ' << stream.t_min << ' ' << stream.t_max << '\n';
    for (const Event& e : stream.events) out << e.t << ',' << e.x << ',' << e.y << ',' << int(e.p) << '\n';
    if (!out) throw DataError("event csv: write failed");
}

EventStream read_events_csv(std::istream& in) {
    EventStream stream;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw DataError("event csv: missing header line");
    {
        std::istringstream hs(line.substr(2));
        if (!(hs >> stream.width >> stream.height >> stream.t_min >> stream.t_max))
            throw DataError("event csv: malformed header");
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        long long t = 0;
        int x = 0, y = 0, p = 0;
        char c1 = 0, c2 = 0, c3 = 0;
        if (!(ls >> t >> c1 >> x >> c2 >> y >> c3 >> p) || c1 != ',' || c2 != ',' || c3 != ',')
            throw DataError("event csv: malformed line " + std::to_string(lineno));
        if (x < 0 || y < 0 || x > 0xFFFF || y > 0xFFFF)
            throw DataError("event csv: coordinate out of range on line " + std::to_string(lineno));
        stream.events.push_back({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), t,
                                 static_cast<std::int8_t>(p)});
    }
    try {
        stream.validate();
    } catch (const InvalidInput& err) {
        throw DataError(std::string("event csv: ") + err.what());
    }
    return stream;
}

}  // namespace evdvsr::events
