#pragma once

// On-disk recording container. A recording is a directory:
//
//   manifest.txt     key = value header, checksums and the frame index
//   events.bin       16-byte little-endian records (or events.csv, t,x,y,p)
//   frames.pgm       concatenated binary PGM (P5) images
//   truth.csv        optional per-frame ground truth
//   segments.csv     optional trajectory segments
//   calibration.csv  optional pupil-center / screen-target pairs

#include <evtrack/gaze.hpp>
#include <evtrack/sim.hpp>
#include <evtrack/types.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace evtrack {

struct Recording {
  SensorSize sensor;
  std::vector<Frame> frames;
  std::vector<Event> events;
  std::vector<GroundTruth> truth;  // empty, or one entry per frame
  std::vector<Segment> segments;
  std::vector<CalibrationPair> calibration;

  bool has_truth() const { return !truth.empty(); }
};

enum class EventFormat { binary, csv };

inline constexpr std::size_t kEventRecordSize = 16;

std::uint32_t crc32(std::string_view bytes);

std::string encode_events_binary(std::span<const Event> events);
/// Throws Error{malformed_header} on a partial record and Error{out_of_order}
/// on decreasing timestamps, with the byte offset of the record.
std::vector<Event> decode_events_binary(std::string_view bytes);
std::string encode_events_csv(std::span<const Event> events);
std::vector<Event> decode_events_csv(std::string_view text);

std::string encode_pgm(const Frame& frame);
/// Parses one P5 image starting at `offset`; the timestamp is not stored in
/// the image and is left at zero.
Frame decode_pgm(std::string_view bytes, std::size_t offset, std::size_t* consumed = nullptr);

std::string encode_truth_csv(std::span<const GroundTruth> truth);
std::vector<GroundTruth> decode_truth_csv(std::string_view text);
std::string encode_segments_csv(std::span<const Segment> segments);
std::vector<Segment> decode_segments_csv(std::string_view text);
std::string encode_calibration_csv(std::span<const CalibrationPair> pairs);
std::vector<CalibrationPair> decode_calibration_csv(std::string_view text);

void write_recording(const std::filesystem::path& dir, const Recording& rec,
                     EventFormat format = EventFormat::binary);
Recording read_recording(const std::filesystem::path& dir);

using StreamItem = std::variant<Frame, Event>;

/// Incremental reader yielding frames and events merged by timestamp (a
/// frame goes before events with the same timestamp). Checksums and the
/// manifest are verified on open; ordering is verified while streaming.
class RecordingReader {
 public:
  explicit RecordingReader(const std::filesystem::path& dir);

  SensorSize sensor() const { return sensor_; }
  std::size_t event_count() const { return event_count_; }
  std::size_t frame_count() const { return frame_index_.size(); }

  std::optional<StreamItem> next();

 private:
  struct FrameEntry {
    Timestamp t;
    std::uint64_t offset;
    std::uint64_t length;
  };

  bool peek_event();
  Frame load_frame(const FrameEntry& entry);

  std::filesystem::path dir_;
  SensorSize sensor_;
  EventFormat format_ = EventFormat::binary;
  std::size_t event_count_ = 0;
  std::vector<FrameEntry> frame_index_;

  std::ifstream events_;
  std::ifstream frames_;
  std::uint64_t event_offset_ = 0;
  std::size_t events_read_ = 0;
  std::optional<Event> pending_event_;
  std::optional<Timestamp> last_event_t_;
  std::size_t next_frame_ = 0;
};

}  // namespace evtrack
