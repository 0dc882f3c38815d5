#include "csi2q/io.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace csi2q {

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<unsigned char>((static_cast<uint64_t>(value) >> (8 * i)) & 0xff);
    }
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
    return static_cast<T>(v);
}

void put_f32(std::ostream& os, float value) {
    uint32_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    put_le<uint32_t>(os, bits);
}

float get_f32(std::istream& is) {
    uint32_t bits = get_le<uint32_t>(is);
    float value;
    std::memcpy(&value, &bits, sizeof(value));
    return value;
}

} // namespace

void validate_header(const ContainerHeader& header) {
    if (header.magic == kMagicCsi) {
        if (header.frame_length != kNumSubcarriers) {
            throw SignalError("container: CSQ1 requires frame_length 52");
        }
    } else if (header.magic == kMagicIq) {
        if (header.frame_length != kPreambleLen) {
            throw SignalError("container: IQF1 requires frame_length 320");
        }
    } else {
        throw SignalError("container: unknown magic '" + header.magic + "'");
    }
}

void write_container(const std::string& path, const std::string& magic,
                     const std::vector<FrameRecord>& frames) {
    const uint16_t frame_length = (magic == kMagicCsi) ? kNumSubcarriers : kPreambleLen;
    ContainerHeader header{magic, 1, static_cast<uint32_t>(frames.size()), frame_length};
    validate_header(header);
    for (const auto& fr : frames) {
        if (fr.samples.size() != frame_length) {
            throw SignalError("container: frame length mismatch on write");
        }
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SignalError("cannot write " + path);
    f.write(magic.data(), 4);
    put_le<uint16_t>(f, header.version);
    put_le<uint32_t>(f, header.frame_count);
    put_le<uint16_t>(f, header.frame_length);
    for (const auto& fr : frames) {
        put_le<uint32_t>(f, fr.device_id);
        for (const auto& s : fr.samples) {
            put_f32(f, static_cast<float>(s.real()));
            put_f32(f, static_cast<float>(s.imag()));
        }
    }
    if (!f) throw SignalError("write failure: " + path);
}

std::vector<FrameRecord> read_container(const std::string& path, ContainerHeader& header) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SignalError("cannot read " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f) throw SignalError("container: truncated header in " + path);
    header.magic.assign(magic, 4);
    header.version = get_le<uint16_t>(f);
    header.frame_count = get_le<uint32_t>(f);
    header.frame_length = get_le<uint16_t>(f);
    validate_header(header);

    std::vector<FrameRecord> frames(header.frame_count);
    for (auto& fr : frames) {
        fr.device_id = get_le<uint32_t>(f);
        fr.samples.resize(header.frame_length);
        for (auto& s : fr.samples) {
            float re = get_f32(f);
            float im = get_f32(f);
            s = cplx(re, im);
        }
        if (!f) throw SignalError("container: declared frame_count exceeds body in " + path);
    }
    // must be exactly consumed
    f.peek();
    if (!f.eof()) throw SignalError("container: trailing bytes in " + path);
    return frames;
}

std::vector<FrameRecord> read_csv_frames(const std::string& path, uint16_t frame_length) {
    std::ifstream f(path);
    if (!f) throw SignalError("cannot read " + path);
    std::vector<FrameRecord> frames;
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        FrameRecord fr;
        if (!std::getline(ss, cell, ',')) continue;
        fr.device_id = static_cast<uint32_t>(std::stoul(cell));
        std::vector<double> vals;
        while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
        if (vals.size() != static_cast<size_t>(frame_length) * 2) {
            throw SignalError("csv: line " + std::to_string(lineno) + " has " +
                              std::to_string(vals.size()) + " values, expected " +
                              std::to_string(frame_length * 2));
        }
        fr.samples.resize(frame_length);
        for (uint16_t i = 0; i < frame_length; ++i) {
            fr.samples[i] = cplx(vals[2 * i], vals[2 * i + 1]);
        }
        frames.push_back(std::move(fr));
    }
    return frames;
}

void write_csv_frames(const std::string& path, const std::vector<FrameRecord>& frames) {
    std::ofstream f(path);
    if (!f) throw SignalError("cannot write " + path);
    f.precision(9);
    for (const auto& fr : frames) {
        f << fr.device_id;
        for (const auto& s : fr.samples) {
            f << "," << static_cast<float>(s.real()) << "," << static_cast<float>(s.imag());
        }
        f << "\n";
    }
}

void write_manifest(const std::string& path, const SimDataset& ds,
                    const std::string& iq_path, const std::string& csi_path) {
    std::map<std::string, uint32_t> counts;
    for (uint32_t d = 0; d < ds.num_devices; ++d) {
        counts[std::to_string(d)] = ds.frames_per_device;
    }
    // stable digest of the generation inputs
    uint64_t config_hash = mix_seed(ds.master_seed,
                                    (uint64_t(ds.num_devices) << 32) | ds.frames_per_device,
                                    static_cast<uint64_t>(ds.snr_db * 1000.0));
    nlohmann::json j = {{"kind", "simulated"},
                        {"devices", ds.num_devices},
                        {"frames_per_device", ds.frames_per_device},
                        {"per_device_counts", counts},
                        {"snr_db", ds.snr_db},
                        {"seed", ds.master_seed},
                        {"config_hash", config_hash},
                        {"files", {{"iq", iq_path}, {"csi", csi_path}}}};
    std::ofstream f(path);
    if (!f) throw SignalError("cannot write " + path);
    f << j.dump(2) << "\n";
}

std::vector<FrameRecord> csi_to_records(const std::vector<CsiMeasurement>& csi) {
    std::vector<FrameRecord> out;
    out.reserve(csi.size());
    for (const auto& c : csi) out.push_back({c.device_id, c.h});
    return out;
}

std::vector<FrameRecord> iq_to_records(const std::vector<IqFrame>& iq) {
    std::vector<FrameRecord> out;
    out.reserve(iq.size());
    for (const auto& f : iq) out.push_back({f.device_id, f.v});
    return out;
}

std::vector<CsiMeasurement> records_to_csi(const std::vector<FrameRecord>& records) {
    std::vector<CsiMeasurement> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        CsiMeasurement c;
        c.device_id = r.device_id;
        c.h = r.samples;
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace csi2q
