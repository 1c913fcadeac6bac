#include "dlr/dataset.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace dlr {

namespace {

constexpr char kMagic[4] = {'D', 'L', 'R', 'S'};
constexpr std::uint32_t kVersion = 1;
constexpr int kFreqBins = 96, kTimeSlots = 14, kPilotBins = 48, kPilotSlots = 2;
constexpr std::size_t kRecordBytes =
    4 + std::size_t(kFreqBins) * kTimeSlots * 2 * 4 + std::size_t(kPilotBins) * kPilotSlots * 2 * 4 + 8;

class ByteWriter {
public:
    explicit ByteWriter(std::vector<unsigned char>& buf) : buf_(buf) {}
    void u16(std::uint16_t v) { raw(&v, 2); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void f32(float v) { raw(&v, 4); }

private:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), b, b + n); // little-endian host assumed
    }
    std::vector<unsigned char>& buf_;
};

class ByteReader {
public:
    ByteReader(const unsigned char* p, std::size_t n) : p_(p), end_(p + n) {}
    std::uint16_t u16() { return read<std::uint16_t>(); }
    std::uint32_t u32() { return read<std::uint32_t>(); }
    std::uint64_t u64() { return read<std::uint64_t>(); }
    float f32() { return read<float>(); }
    std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }

private:
    template <typename T>
    T read() {
        require(remaining() >= sizeof(T), ErrorCode::truncated_payload,
                "dataset: truncated payload");
        T v;
        std::memcpy(&v, p_, sizeof(T));
        p_ += sizeof(T);
        return v;
    }
    const unsigned char* p_;
    const unsigned char* end_;
};

void check_standard_geometry(const Dataset& ds) {
    require(ds.pattern.num_freq_bins == kFreqBins && ds.pattern.num_time_slots == kTimeSlots &&
                ds.pattern.num_pilot_bins() == kPilotBins &&
                ds.pattern.num_pilot_slots() == kPilotSlots,
            ErrorCode::invalid_argument,
            "dataset: container supports only the 96x14 grid with a 48x2 pilot layout");
}

} // namespace

void write_dataset(const Dataset& ds, const std::string& path) {
    check_standard_geometry(ds);
    require(!ds.records.empty(), ErrorCode::invalid_argument, "dataset: no records");

    std::vector<unsigned char> buf;
    buf.reserve(16 + 100 + ds.records.size() * kRecordBytes);
    ByteWriter w(buf);
    buf.insert(buf.end(), kMagic, kMagic + 4);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(ds.records.size()));
    for (int v : ds.pattern.freq_indices) w.u16(static_cast<std::uint16_t>(v));
    for (int v : ds.pattern.time_indices) w.u16(static_cast<std::uint16_t>(v));

    for (const SampleRecord& rec : ds.records) {
        w.f32(static_cast<float>(rec.snr_db));
        for (int f = 0; f < kFreqBins; ++f)
            for (int t = 0; t < kTimeSlots; ++t) {
                w.f32(static_cast<float>(rec.truth.re.at(f, t)));
                w.f32(static_cast<float>(rec.truth.im.at(f, t)));
            }
        for (int k = 0; k < kPilotBins; ++k)
            for (int s = 0; s < kPilotSlots; ++s) {
                w.f32(static_cast<float>(rec.dmrs_noisy.re.at(k, s)));
                w.f32(static_cast<float>(rec.dmrs_noisy.im.at(k, s)));
            }
        w.u64(rec.seed);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::io_failure, "dataset: cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    require(out.good(), ErrorCode::io_failure, "dataset: write failed for " + path);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::io_failure, "dataset: cannot open " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    require(in.good() || in.eof(), ErrorCode::io_failure, "dataset: read failed for " + path);

    require(buf.size() >= 4 && std::memcmp(buf.data(), kMagic, 4) == 0, ErrorCode::bad_magic,
            "dataset: bad magic");
    ByteReader r(buf.data() + 4, buf.size() - 4);
    const std::uint32_t version = r.u32();
    require(version == kVersion, ErrorCode::version_mismatch,
            "dataset: unsupported version " + std::to_string(version));
    const std::uint32_t count = r.u32();
    require(count > 0, ErrorCode::truncated_payload, "dataset: zero record count");

    Dataset ds;
    ds.pattern.num_freq_bins = kFreqBins;
    ds.pattern.num_time_slots = kTimeSlots;
    ds.pattern.freq_indices.resize(kPilotBins);
    ds.pattern.time_indices.resize(kPilotSlots);
    for (int i = 0; i < kPilotBins; ++i) ds.pattern.freq_indices[i] = r.u16();
    for (int i = 0; i < kPilotSlots; ++i) ds.pattern.time_indices[i] = r.u16();
    ds.pattern.validate();

    require(r.remaining() == static_cast<std::size_t>(count) * kRecordBytes,
            ErrorCode::truncated_payload,
            "dataset: payload length does not match header record count");

    ds.records.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        SampleRecord& rec = ds.records[i];
        rec.snr_db = r.f32();
        rec.truth = ChannelGrid(kFreqBins, kTimeSlots);
        for (int f = 0; f < kFreqBins; ++f)
            for (int t = 0; t < kTimeSlots; ++t) {
                rec.truth.re.at(f, t) = r.f32();
                rec.truth.im.at(f, t) = r.f32();
            }
        rec.dmrs_noisy = DmrsGrid(kPilotBins, kPilotSlots);
        for (int k = 0; k < kPilotBins; ++k)
            for (int s = 0; s < kPilotSlots; ++s) {
                rec.dmrs_noisy.re.at(k, s) = r.f32();
                rec.dmrs_noisy.im.at(k, s) = r.f32();
            }
        rec.seed = r.u64();
    }
    return ds;
}

} // namespace dlr
