#include <evtrack/error.hpp>
#include <evtrack/recording.hpp>
#include <evtrack/runs.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

using namespace evtrack;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("evtrack_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const Recording& small_recording() {
  static const Recording rec = [] {
    const SceneConfig scene;
    Trajectory traj(scene.screen, {scene.screen.cx, scene.screen.cy});
    traj.fixate(60, 0).saccade_to({scene.screen.cx + 250, scene.screen.cy + 50}, 300).fixate(60, 1);
    return simulate_recording(scene, traj, 3);
  }();
  return rec;
}

ErrorCode code_of(const std::function<void()>& f, std::int64_t* offset = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (offset) *offset = e.offset();
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::io;
}

}  // namespace

TEST(Crc32, KnownValue) { EXPECT_EQ(crc32("123456789"), 0xCBF43926u); }

TEST(EventsBinary, RoundTripAndRecordSize) {
  const std::vector<Event> ev{{1, 2, 3, 1}, {5, 300, 200, -1}, {5, 0, 0, 1}};
  const std::string bytes = encode_events_binary(ev);
  EXPECT_EQ(bytes.size(), 3 * kEventRecordSize);
  EXPECT_EQ(decode_events_binary(bytes), ev);
}

TEST(EventsBinary, TruncatedRecordReportsOffset) {
  const std::vector<Event> ev{{1, 2, 3, 1}, {5, 300, 200, -1}};
  const std::string bytes = encode_events_binary(ev);
  std::int64_t off = -2;
  EXPECT_EQ(code_of([&] { decode_events_binary(bytes.substr(0, bytes.size() - 3)); }, &off),
            ErrorCode::malformed_header);
  EXPECT_EQ(off, 16);
}

TEST(EventsBinary, OutOfOrderReportsOffset) {
  const std::vector<Event> ev{{9, 2, 3, 1}, {5, 3, 3, 1}};
  std::int64_t off = -2;
  EXPECT_EQ(code_of([&] { decode_events_binary(encode_events_binary(ev)); }, &off), ErrorCode::out_of_order);
  EXPECT_EQ(off, 16);
}

TEST(EventsCsv, RoundTrip) {
  const std::vector<Event> ev{{1, 2, 3, 1}, {5, 300, 200, -1}};
  EXPECT_EQ(decode_events_csv(encode_events_csv(ev)), ev);
}

TEST(Pgm, RoundTrip) {
  Frame f(0, 5, 3);
  for (std::size_t i = 0; i < f.pixels.size(); ++i) f.pixels[i] = static_cast<std::uint8_t>(17 * i);
  const std::string bytes = "xx" + encode_pgm(f);
  std::size_t used = 0;
  const Frame back = decode_pgm(bytes, 2, &used);
  EXPECT_EQ(back.pixels, f.pixels);
  EXPECT_EQ(used, bytes.size() - 2);
  EXPECT_THROW(decode_pgm("P6\n5 3\n255\n", 0), Error);
}

TEST(Recording, EmptyRoundTrip) {
  TempDir dir;
  Recording rec;
  write_recording(dir.path(), rec);
  const Recording back = read_recording(dir.path());
  EXPECT_EQ(back.sensor, rec.sensor);
  EXPECT_TRUE(back.frames.empty());
  EXPECT_TRUE(back.events.empty());
}

TEST(Recording, SimulatorRoundTripBitExact) {
  TempDir a, b;
  write_recording(a.path(), small_recording());
  const Recording back = read_recording(a.path());
  EXPECT_EQ(back.events, small_recording().events);
  EXPECT_EQ(back.frames, small_recording().frames);
  ASSERT_EQ(back.truth.size(), small_recording().truth.size());
  write_recording(b.path(), back);
  for (const char* name : {"manifest.txt", "events.bin", "frames.pgm", "truth.csv", "segments.csv"})
    EXPECT_EQ(slurp(a.path() / name), slurp(b.path() / name)) << name;
}

TEST(Recording, CsvEventsRoundTrip) {
  TempDir dir;
  write_recording(dir.path(), small_recording(), EventFormat::csv);
  EXPECT_EQ(read_recording(dir.path()).events, small_recording().events);
}

TEST(Recording, TruncatedEventsFile) {
  TempDir dir;
  write_recording(dir.path(), small_recording());
  const fs::path ev = dir.path() / "events.bin";
  const auto size = fs::file_size(ev);
  fs::resize_file(ev, size - 20);
  std::int64_t off = -2;
  EXPECT_EQ(code_of([&] { read_recording(dir.path()); }, &off), ErrorCode::malformed_header);
  EXPECT_EQ(off, static_cast<std::int64_t>((size - 20) / kEventRecordSize * kEventRecordSize));
}

TEST(Recording, CorruptedPayloadFailsChecksum) {
  TempDir dir;
  write_recording(dir.path(), small_recording());
  const fs::path fr = dir.path() / "frames.pgm";
  std::string bytes = slurp(fr);
  bytes[bytes.size() - 10] ^= 0x55;
  std::ofstream(fr, std::ios::binary) << bytes;
  EXPECT_EQ(code_of([&] { read_recording(dir.path()); }), ErrorCode::checksum_mismatch);
}

TEST(Recording, TruncatedManifest) {
  TempDir dir;
  write_recording(dir.path(), small_recording());
  const fs::path m = dir.path() / "manifest.txt";
  const std::string text = slurp(m);
  std::ofstream(m, std::ios::binary) << text.substr(0, 20);
  EXPECT_EQ(code_of([&] { read_recording(dir.path()); }), ErrorCode::malformed_header);
}

TEST(RecordingReader, StreamsMergedInOrder) {
  TempDir dir;
  write_recording(dir.path(), small_recording());
  RecordingReader reader(dir.path());
  std::size_t frames = 0, events = 0;
  Timestamp last = 0;
  while (auto item = reader.next()) {
    const Timestamp t = std::visit([](const auto& x) { return x.t; }, *item);
    EXPECT_GE(t, last);
    last = t;
    if (std::holds_alternative<Frame>(*item)) ++frames;
    else ++events;
  }
  EXPECT_EQ(frames, small_recording().frames.size());
  EXPECT_EQ(events, small_recording().events.size());
}

TEST(Truth, CsvRoundTrip) {
  const auto& truth = small_recording().truth;
  const auto back = decode_truth_csv(encode_truth_csv(truth));
  ASSERT_EQ(back.size(), truth.size());
  EXPECT_EQ(back.front().ellipse, truth.front().ellipse);
  EXPECT_EQ(back.back().phase, truth.back().phase);
}
