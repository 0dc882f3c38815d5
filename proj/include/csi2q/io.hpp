#pragma once

#include "csi2q/device_sim.hpp"

#include <string>
#include <vector>

namespace csi2q {

// Binary container: 4-byte magic ("CSQ1" for 52-sample CSI, "IQF1" for
// 320-sample time-domain frames), u16 version, u32 frame_count,
// u16 frame_length, then per frame a u32 device_id and frame_length
// float32 (re, im) pairs, all little endian.
struct ContainerHeader {
    std::string magic;       // "CSQ1" or "IQF1"
    uint16_t version = 1;
    uint32_t frame_count = 0;
    uint16_t frame_length = 0;
};

struct FrameRecord {
    uint32_t device_id = 0;
    CVec samples;
};

constexpr const char* kMagicCsi = "CSQ1";
constexpr const char* kMagicIq = "IQF1";

void write_container(const std::string& path, const std::string& magic,
                     const std::vector<FrameRecord>& frames);
std::vector<FrameRecord> read_container(const std::string& path, ContainerHeader& header);

// frame-length consistency rules: CSQ1 => 52, IQF1 => 320
void validate_header(const ContainerHeader& header);

// CSV rows: device_id, then alternating re/im columns.
std::vector<FrameRecord> read_csv_frames(const std::string& path, uint16_t frame_length);
void write_csv_frames(const std::string& path, const std::vector<FrameRecord>& frames);

// JSON manifest describing a generated dataset.
void write_manifest(const std::string& path, const SimDataset& ds,
                    const std::string& iq_path, const std::string& csi_path);

std::vector<FrameRecord> csi_to_records(const std::vector<CsiMeasurement>& csi);
std::vector<FrameRecord> iq_to_records(const std::vector<IqFrame>& iq);
std::vector<CsiMeasurement> records_to_csi(const std::vector<FrameRecord>& records);

} // namespace csi2q
