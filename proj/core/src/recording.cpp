#include <evtrack/recording.hpp>

#include <evtrack/error.hpp>

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <map>
#include <sstream>

namespace evtrack {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kFormatName = "evtrack-recording";
constexpr int kFormatVersion = 1;

[[noreturn]] void malformed(const std::string& what, std::int64_t offset) {
  throw Error(ErrorCode::malformed_header, what, offset);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot create " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

struct Line {
  std::string_view text;
  std::size_t offset;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    out.push_back({text.substr(pos, end - pos), pos});
    pos = end + 1;
  }
  return out;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t next = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out, int base = 10) {
  const char* end = s.data() + s.size();
  std::from_chars_result r;
  if constexpr (std::is_floating_point_v<T>) {
    r = std::from_chars(s.data(), end, out);
  } else {
    r = std::from_chars(s.data(), end, out, base);
  }
  return r.ec == std::errc{} && r.ptr == end && !s.empty();
}

template <typename T>
T field(std::string_view s, std::size_t offset) {
  T v{};
  if (!parse_number(s, v)) malformed("cannot parse field '" + std::string(s) + "'", static_cast<std::int64_t>(offset));
  return v;
}

void append_double(std::string& out, double v) {
  std::array<char, 32> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), r.ptr);
}

template <typename T>
void append_int(std::string& out, T v) {
  std::array<char, 24> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), r.ptr);
}

std::string hex32(std::uint32_t v) {
  std::array<char, 9> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v, 16);
  std::string s(buf.data(), r.ptr);
  return std::string(8 - s.size(), '0') + s;
}

// Splits a CSV document into data rows, checking the header and column count.
std::vector<std::pair<std::vector<std::string_view>, std::size_t>> csv_rows(std::string_view text,
                                                                            std::string_view header) {
  const auto lines = split_lines(text);
  if (lines.empty() || trim(lines[0].text) != header) malformed("missing CSV header '" + std::string(header) + "'", 0);
  const std::size_t columns = split_fields(header, ',').size();
  std::vector<std::pair<std::vector<std::string_view>, std::size_t>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i].text).empty()) continue;
    auto f = split_fields(lines[i].text, ',');
    if (f.size() != columns) malformed("wrong number of CSV columns", static_cast<std::int64_t>(lines[i].offset));
    rows.emplace_back(std::move(f), lines[i].offset);
  }
  return rows;
}

constexpr std::string_view kEventsCsvHeader = "t,x,y,p";
constexpr std::string_view kTruthHeader =
    "t,phase,target,center_x,center_y,a,h,b,g,f,screen_x,screen_y,theta_deg,phi_deg,eyelid_drop";
constexpr std::string_view kSegmentsHeader = "kind,t_start,t_end,from_x,from_y,to_x,to_y,depth,half_size,period,target";
constexpr std::string_view kCalibrationHeader = "pupil_x,pupil_y,screen_x,screen_y";

void put_u16(char* p, std::uint16_t v) {
  p[0] = static_cast<char>(v & 0xFF);
  p[1] = static_cast<char>(v >> 8);
}

Event unpack_event(const char* p) {
  const auto byte = [p](int i) { return static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])); };
  Event e;
  e.t = 0;
  for (int i = 7; i >= 0; --i) e.t = (e.t << 8) | byte(i);
  e.x = static_cast<std::uint16_t>(byte(8) | (byte(9) << 8));
  e.y = static_cast<std::uint16_t>(byte(10) | (byte(11) << 8));
  e.polarity = static_cast<std::int8_t>(static_cast<unsigned char>(p[12]));
  return e;
}

void check_polarity(const Event& e, std::int64_t offset) {
  if (e.polarity != 1 && e.polarity != -1) malformed("event polarity must be +1 or -1", offset);
}

Event parse_csv_event(std::string_view line, std::size_t offset) {
  const auto f = split_fields(line, ',');
  if (f.size() != 4) malformed("event row needs 4 columns", static_cast<std::int64_t>(offset));
  Event e;
  e.t = field<std::uint64_t>(f[0], offset);
  e.x = field<std::uint16_t>(f[1], offset);
  e.y = field<std::uint16_t>(f[2], offset);
  e.polarity = static_cast<std::int8_t>(field<int>(f[3], offset));
  check_polarity(e, static_cast<std::int64_t>(offset));
  return e;
}

struct Manifest {
  SensorSize sensor;
  std::string events_file;
  std::size_t event_count = 0;
  std::uint32_t events_crc = 0;
  std::string frames_file;
  std::uint32_t frames_crc = 0;
  struct Entry {
    Timestamp t;
    std::uint64_t offset;
    std::uint64_t length;
  };
  std::vector<Entry> frames;
  struct Sidecar {
    std::string file;
    std::uint32_t crc = 0;
  };
  std::optional<Sidecar> truth, segments, calibration;
};

Manifest parse_manifest(std::string_view text) {
  Manifest m;
  std::map<std::string, std::pair<std::string, std::size_t>> kv;
  std::size_t frame_count = 0;
  bool have_frame_count = false;
  for (const Line& line : split_lines(text)) {
    const std::string_view body = trim(line.text);
    const auto off = static_cast<std::int64_t>(line.offset);
    if (body.empty() || body.front() == '#') continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string_view::npos) malformed("manifest line lacks '='", off);
    const std::string key(trim(body.substr(0, eq)));
    const std::string_view value = trim(body.substr(eq + 1));
    if (key == "frame") {
      const auto f = split_fields(value, ' ');
      if (f.size() != 3) malformed("frame entry needs 't offset length'", off);
      m.frames.push_back({field<std::uint64_t>(f[0], line.offset), field<std::uint64_t>(f[1], line.offset),
                          field<std::uint64_t>(f[2], line.offset)});
      continue;
    }
    if (!kv.emplace(key, std::make_pair(std::string(value), line.offset)).second)
      malformed("duplicate manifest key " + key, off);
  }
  const auto end_off = static_cast<std::int64_t>(text.size());
  auto take = [&](const std::string& key) -> std::pair<std::string, std::size_t> {
    auto it = kv.find(key);
    if (it == kv.end()) malformed("manifest lacks key " + key, end_off);
    auto v = it->second;
    kv.erase(it);
    return v;
  };
  auto take_crc = [&](const std::string& key) {
    const auto [v, off] = take(key);
    std::uint32_t crc = 0;
    if (!parse_number(std::string_view(v), crc, 16)) malformed("bad checksum for " + key, static_cast<std::int64_t>(off));
    return crc;
  };

  {
    const auto [v, off] = take("format");
    if (v != kFormatName) malformed("unknown container format", static_cast<std::int64_t>(off));
  }
  {
    const auto [v, off] = take("version");
    if (field<int>(v, off) != kFormatVersion) malformed("unsupported container version", static_cast<std::int64_t>(off));
  }
  {
    const auto [w, woff] = take("width");
    const auto [h, hoff] = take("height");
    m.sensor = {field<int>(w, woff), field<int>(h, hoff)};
    if (m.sensor.width <= 0 || m.sensor.height <= 0 || m.sensor.width > 65535 || m.sensor.height > 65535)
      malformed("sensor dimensions out of range", static_cast<std::int64_t>(woff));
  }
  m.events_file = take("events_file").first;
  {
    const auto [v, off] = take("event_count");
    m.event_count = field<std::size_t>(v, off);
  }
  m.events_crc = take_crc("events_crc32");
  m.frames_file = take("frames_file").first;
  {
    const auto [v, off] = take("frame_count");
    frame_count = field<std::size_t>(v, off);
    have_frame_count = true;
  }
  m.frames_crc = take_crc("frames_crc32");
  for (auto [name, slot] : {std::pair{"truth", &m.truth}, std::pair{"segments", &m.segments},
                            std::pair{"calibration", &m.calibration}}) {
    const std::string file_key = std::string(name) + "_file";
    if (kv.count(file_key)) {
      Manifest::Sidecar sc;
      sc.file = take(file_key).first;
      sc.crc = take_crc(std::string(name) + "_crc32");
      *slot = sc;
    }
  }
  if (!kv.empty()) {
    const auto& [key, v] = *kv.begin();
    malformed("unknown manifest key " + key, static_cast<std::int64_t>(v.second));
  }
  if (have_frame_count && frame_count != m.frames.size())
    malformed("frame_count disagrees with the frame index", end_off);
  for (const std::string* f : {&m.events_file, &m.frames_file})
    if (f->empty() || f->find('/') != std::string::npos || *f == "." || *f == "..")
      malformed("payload names must be plain file names", end_off);
  return m;
}

EventFormat format_for(const std::string& file) {
  return fs::path(file).extension() == ".csv" ? EventFormat::csv : EventFormat::binary;
}

std::uint32_t file_crc(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto n = in.gcount();
    if (n > 0) crc = ::crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

void verify_crc(const fs::path& path, std::uint32_t expected) {
  if (file_crc(path) != expected) throw Error(ErrorCode::checksum_mismatch, "checksum mismatch in " + path.filename().string());
}

}  // namespace

std::uint32_t crc32(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1U << 30));
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), n);
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string encode_events_binary(std::span<const Event> events) {
  std::string out(events.size() * kEventRecordSize, '\0');
  char* p = out.data();
  for (const Event& e : events) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<char>((e.t >> (8 * i)) & 0xFF);
    put_u16(p + 8, e.x);
    put_u16(p + 10, e.y);
    p[12] = static_cast<char>(e.polarity);
    p += kEventRecordSize;
  }
  return out;
}

std::vector<Event> decode_events_binary(std::string_view bytes) {
  const std::size_t whole = bytes.size() / kEventRecordSize;
  if (bytes.size() % kEventRecordSize != 0)
    malformed("truncated event record", static_cast<std::int64_t>(whole * kEventRecordSize));
  std::vector<Event> out;
  out.reserve(whole);
  for (std::size_t i = 0; i < whole; ++i) {
    const auto off = static_cast<std::int64_t>(i * kEventRecordSize);
    const Event e = unpack_event(bytes.data() + i * kEventRecordSize);
    check_polarity(e, off);
    if (!out.empty() && e.t < out.back().t) throw Error(ErrorCode::out_of_order, "event timestamps decrease", off);
    out.push_back(e);
  }
  return out;
}

std::string encode_events_csv(std::span<const Event> events) {
  std::string out(kEventsCsvHeader);
  out += '\n';
  for (const Event& e : events) {
    append_int(out, e.t);
    out += ',';
    append_int(out, e.x);
    out += ',';
    append_int(out, e.y);
    out += ',';
    append_int(out, static_cast<int>(e.polarity));
    out += '\n';
  }
  return out;
}

std::vector<Event> decode_events_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || trim(lines[0].text) != kEventsCsvHeader) malformed("missing CSV header 't,x,y,p'", 0);
  std::vector<Event> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i].text).empty()) continue;
    const Event e = parse_csv_event(lines[i].text, lines[i].offset);
    if (!out.empty() && e.t < out.back().t)
      throw Error(ErrorCode::out_of_order, "event timestamps decrease", static_cast<std::int64_t>(lines[i].offset));
    out.push_back(e);
  }
  return out;
}

std::string encode_pgm(const Frame& frame) {
  std::string out = "P5\n";
  append_int(out, frame.width);
  out += ' ';
  append_int(out, frame.height);
  out += "\n255\n";
  out.append(reinterpret_cast<const char*>(frame.pixels.data()), frame.pixels.size());
  return out;
}

Frame decode_pgm(std::string_view bytes, std::size_t offset, std::size_t* consumed) {
  std::size_t pos = offset;
  const auto fail = [&](const char* what) { malformed(what, static_cast<std::int64_t>(pos)); };
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&] {
    skip_space();
    const std::size_t start = pos;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') ++pos;
    int v = 0;
    if (pos == start || !parse_number(bytes.substr(start, pos - start), v)) fail("bad PGM header field");
    return v;
  };
  if (bytes.size() < offset + 2 || bytes.substr(offset, 2) != "P5") fail("missing P5 magic");
  pos += 2;
  const int w = read_int();
  const int h = read_int();
  const int maxval = read_int();
  if (w <= 0 || h <= 0) fail("PGM dimensions must be positive");
  if (maxval != 255) fail("only 8-bit PGM is supported");
  if (pos >= bytes.size()) fail("truncated PGM header");
  ++pos;  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - pos < n) fail("truncated PGM raster");
  std::vector<std::uint8_t> px(n);
  std::memcpy(px.data(), bytes.data() + pos, n);
  pos += n;
  if (consumed) *consumed = pos - offset;
  return Frame(0, w, h, std::move(px));
}

std::string encode_truth_csv(std::span<const GroundTruth> truth) {
  std::string out(kTruthHeader);
  out += '\n';
  for (const GroundTruth& g : truth) {
    append_int(out, g.t);
    out += ',';
    out += to_string(g.phase);
    out += ',';
    append_int(out, g.target_index);
    for (double v : {g.center.x, g.center.y, g.ellipse.a, g.ellipse.h, g.ellipse.b, g.ellipse.g, g.ellipse.f,
                     g.screen.x, g.screen.y, g.angles.theta_deg, g.angles.phi_deg, g.eyelid_drop}) {
      out += ',';
      append_double(out, v);
    }
    out += '\n';
  }
  return out;
}

std::vector<GroundTruth> decode_truth_csv(std::string_view text) {
  std::vector<GroundTruth> out;
  for (const auto& [f, off] : csv_rows(text, kTruthHeader)) {
    GroundTruth g;
    g.t = field<std::uint64_t>(f[0], off);
    try {
      g.phase = segment_kind_from_string(std::string(f[1]));
    } catch (const Error&) {
      malformed("unknown phase label", static_cast<std::int64_t>(off));
    }
    g.target_index = field<int>(f[2], off);
    g.center = {field<double>(f[3], off), field<double>(f[4], off)};
    g.ellipse = {field<double>(f[5], off), field<double>(f[6], off), field<double>(f[7], off),
                 field<double>(f[8], off), field<double>(f[9], off)};
    g.screen = {field<double>(f[10], off), field<double>(f[11], off)};
    g.angles = {field<double>(f[12], off), field<double>(f[13], off)};
    g.eyelid_drop = field<double>(f[14], off);
    out.push_back(g);
  }
  return out;
}

std::string encode_segments_csv(std::span<const Segment> segments) {
  std::string out(kSegmentsHeader);
  out += '\n';
  for (const Segment& s : segments) {
    out += to_string(s.kind);
    for (double v : {s.t_start, s.t_end, s.from.x, s.from.y, s.to.x, s.to.y, s.depth, s.half_size, s.period}) {
      out += ',';
      append_double(out, v);
    }
    out += ',';
    append_int(out, s.target_index);
    out += '\n';
  }
  return out;
}

std::vector<Segment> decode_segments_csv(std::string_view text) {
  std::vector<Segment> out;
  for (const auto& [f, off] : csv_rows(text, kSegmentsHeader)) {
    Segment s;
    try {
      s.kind = segment_kind_from_string(std::string(f[0]));
    } catch (const Error&) {
      malformed("unknown segment kind", static_cast<std::int64_t>(off));
    }
    s.t_start = field<double>(f[1], off);
    s.t_end = field<double>(f[2], off);
    s.from = {field<double>(f[3], off), field<double>(f[4], off)};
    s.to = {field<double>(f[5], off), field<double>(f[6], off)};
    s.depth = field<double>(f[7], off);
    s.half_size = field<double>(f[8], off);
    s.period = field<double>(f[9], off);
    s.target_index = field<int>(f[10], off);
    out.push_back(s);
  }
  return out;
}

std::string encode_calibration_csv(std::span<const CalibrationPair> pairs) {
  std::string out(kCalibrationHeader);
  out += '\n';
  for (const CalibrationPair& p : pairs) {
    append_double(out, p.pupil_center.x);
    out += ',';
    append_double(out, p.pupil_center.y);
    out += ',';
    append_double(out, p.screen_target.x);
    out += ',';
    append_double(out, p.screen_target.y);
    out += '\n';
  }
  return out;
}

std::vector<CalibrationPair> decode_calibration_csv(std::string_view text) {
  std::vector<CalibrationPair> out;
  for (const auto& [f, off] : csv_rows(text, kCalibrationHeader))
    out.push_back({{field<double>(f[0], off), field<double>(f[1], off)},
                   {field<double>(f[2], off), field<double>(f[3], off)}});
  return out;
}

void write_recording(const fs::path& dir, const Recording& rec, EventFormat format) {
  for (std::size_t i = 1; i < rec.events.size(); ++i)
    if (rec.events[i].t < rec.events[i - 1].t)
      throw Error(ErrorCode::out_of_order, "event timestamps decrease", static_cast<std::int64_t>(i));
  for (std::size_t i = 1; i < rec.frames.size(); ++i)
    if (rec.frames[i].t < rec.frames[i - 1].t)
      throw Error(ErrorCode::out_of_order, "frame timestamps decrease", static_cast<std::int64_t>(i));
  for (const Frame& f : rec.frames)
    if (f.width != rec.sensor.width || f.height != rec.sensor.height)
      throw Error(ErrorCode::dimension_mismatch, "frame size differs from the sensor size");
  if (rec.has_truth() && rec.truth.size() != rec.frames.size())
    throw Error(ErrorCode::dimension_mismatch, "truth needs exactly one entry per frame");

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create directory " + dir.string());

  const std::string events_file = format == EventFormat::csv ? "events.csv" : "events.bin";
  const std::string events =
      format == EventFormat::csv ? encode_events_csv(rec.events) : encode_events_binary(rec.events);
  std::string frames;
  std::string index;
  for (const Frame& f : rec.frames) {
    const std::string pgm = encode_pgm(f);
    index += "frame = ";
    append_int(index, f.t);
    index += ' ';
    append_int(index, frames.size());
    index += ' ';
    append_int(index, pgm.size());
    index += '\n';
    frames += pgm;
  }

  std::string manifest;
  manifest += "format = " + std::string(kFormatName) + "\n";
  manifest += "version = " + std::to_string(kFormatVersion) + "\n";
  manifest += "width = " + std::to_string(rec.sensor.width) + "\n";
  manifest += "height = " + std::to_string(rec.sensor.height) + "\n";
  manifest += "events_file = " + events_file + "\n";
  manifest += "event_count = " + std::to_string(rec.events.size()) + "\n";
  manifest += "events_crc32 = " + hex32(crc32(events)) + "\n";
  manifest += "frames_file = frames.pgm\n";
  manifest += "frame_count = " + std::to_string(rec.frames.size()) + "\n";
  manifest += "frames_crc32 = " + hex32(crc32(frames)) + "\n";

  auto sidecar = [&](const char* name, const std::string& body) {
    const std::string file = std::string(name) + ".csv";
    write_file(dir / file, body);
    manifest += std::string(name) + "_file = " + file + "\n";
    manifest += std::string(name) + "_crc32 = " + hex32(crc32(body)) + "\n";
  };
  if (rec.has_truth()) sidecar("truth", encode_truth_csv(rec.truth));
  if (!rec.segments.empty()) sidecar("segments", encode_segments_csv(rec.segments));
  if (!rec.calibration.empty()) sidecar("calibration", encode_calibration_csv(rec.calibration));
  manifest += index;

  // Drop payloads of the other event format so a directory never holds both.
  fs::remove(dir / (format == EventFormat::csv ? "events.bin" : "events.csv"), ec);
  write_file(dir / events_file, events);
  write_file(dir / "frames.pgm", frames);
  write_file(dir / "manifest.txt", manifest);
}

Recording read_recording(const fs::path& dir) {
  const Manifest m = parse_manifest(read_file(dir / "manifest.txt"));
  Recording rec;
  rec.sensor = m.sensor;

  const std::string events = read_file(dir / m.events_file);
  if (format_for(m.events_file) == EventFormat::csv) {
    rec.events = decode_events_csv(events);
  } else {
    if (events.size() < m.event_count * kEventRecordSize || events.size() % kEventRecordSize != 0)
      malformed("truncated event stream",
                static_cast<std::int64_t>(events.size() / kEventRecordSize * kEventRecordSize));
    rec.events = decode_events_binary(events);
  }
  if (rec.events.size() != m.event_count)
    malformed("event_count disagrees with the event stream", static_cast<std::int64_t>(events.size()));

  const std::string frames = read_file(dir / m.frames_file);
  for (const auto& entry : m.frames) {
    if (entry.offset > frames.size() || entry.length > frames.size() - entry.offset)
      malformed("frame extends past the end of the frame stream", static_cast<std::int64_t>(entry.offset));
    std::size_t used = 0;
    Frame f = decode_pgm(std::string_view(frames).substr(0, entry.offset + entry.length), entry.offset, &used);
    if (used != entry.length) malformed("frame length disagrees with the index", static_cast<std::int64_t>(entry.offset));
    if (f.width != m.sensor.width || f.height != m.sensor.height)
      malformed("frame size differs from the sensor size", static_cast<std::int64_t>(entry.offset));
    if (!rec.frames.empty() && entry.t < rec.frames.back().t)
      throw Error(ErrorCode::out_of_order, "frame timestamps decrease", static_cast<std::int64_t>(entry.offset));
    f.t = entry.t;
    rec.frames.push_back(std::move(f));
  }
  if (crc32(events) != m.events_crc) throw Error(ErrorCode::checksum_mismatch, "checksum mismatch in " + m.events_file);
  if (crc32(frames) != m.frames_crc) throw Error(ErrorCode::checksum_mismatch, "checksum mismatch in " + m.frames_file);

  auto load = [&](const std::optional<Manifest::Sidecar>& sc) -> std::optional<std::string> {
    if (!sc) return std::nullopt;
    std::string body = read_file(dir / sc->file);
    if (crc32(body) != sc->crc) throw Error(ErrorCode::checksum_mismatch, "checksum mismatch in " + sc->file);
    return body;
  };
  if (auto body = load(m.truth)) {
    rec.truth = decode_truth_csv(*body);
    if (rec.truth.size() != rec.frames.size()) malformed("truth needs exactly one entry per frame", 0);
  }
  if (auto body = load(m.segments)) rec.segments = decode_segments_csv(*body);
  if (auto body = load(m.calibration)) rec.calibration = decode_calibration_csv(*body);
  return rec;
}

RecordingReader::RecordingReader(const fs::path& dir) : dir_(dir) {
  const Manifest m = parse_manifest(read_file(dir / "manifest.txt"));
  sensor_ = m.sensor;
  format_ = format_for(m.events_file);
  event_count_ = m.event_count;
  for (const auto& e : m.frames) frame_index_.push_back({e.t, e.offset, e.length});

  const fs::path events_path = dir / m.events_file;
  const fs::path frames_path = dir / m.frames_file;
  std::error_code ec;
  const auto events_size = fs::file_size(events_path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot stat " + events_path.string());
  if (format_ == EventFormat::binary && events_size != event_count_ * kEventRecordSize)
    malformed("truncated event stream", static_cast<std::int64_t>(std::min<std::uint64_t>(
                                            events_size / kEventRecordSize * kEventRecordSize,
                                            event_count_ * kEventRecordSize)));
  const auto frames_size = fs::file_size(frames_path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot stat " + frames_path.string());
  for (const auto& e : frame_index_)
    if (e.offset > frames_size || e.length > frames_size - e.offset)
      malformed("frame extends past the end of the frame stream", static_cast<std::int64_t>(e.offset));
  verify_crc(events_path, m.events_crc);
  verify_crc(frames_path, m.frames_crc);

  events_.open(events_path, std::ios::binary);
  frames_.open(frames_path, std::ios::binary);
  if (!events_ || !frames_) throw Error(ErrorCode::io, "cannot open recording payloads in " + dir.string());
  if (format_ == EventFormat::csv) {
    std::string header;
    std::getline(events_, header);
    if (trim(header) != kEventsCsvHeader) malformed("missing CSV header 't,x,y,p'", 0);
    event_offset_ = header.size() + 1;
  }
}

bool RecordingReader::peek_event() {
  if (pending_event_) return true;
  Event e;
  const auto off = static_cast<std::int64_t>(event_offset_);
  if (format_ == EventFormat::binary) {
    if (events_read_ >= event_count_) return false;
    std::array<char, kEventRecordSize> rec{};
    events_.read(rec.data(), rec.size());
    if (events_.gcount() != static_cast<std::streamsize>(rec.size())) malformed("truncated event record", off);
    e = unpack_event(rec.data());
    check_polarity(e, off);
    event_offset_ += kEventRecordSize;
  } else {
    std::string line;
    for (;;) {
      if (!std::getline(events_, line)) {
        if (events_read_ != event_count_) malformed("event_count disagrees with the event stream", off);
        return false;
      }
      const std::size_t line_off = event_offset_;
      event_offset_ += line.size() + 1;
      if (trim(line).empty()) continue;
      e = parse_csv_event(line, line_off);
      break;
    }
  }
  if (last_event_t_ && e.t < *last_event_t_) throw Error(ErrorCode::out_of_order, "event timestamps decrease", off);
  last_event_t_ = e.t;
  ++events_read_;
  pending_event_ = e;
  return true;
}

Frame RecordingReader::load_frame(const FrameEntry& entry) {
  std::string buf(entry.length, '\0');
  frames_.seekg(static_cast<std::streamoff>(entry.offset));
  frames_.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (frames_.gcount() != static_cast<std::streamsize>(buf.size()))
    malformed("truncated frame", static_cast<std::int64_t>(entry.offset));
  std::size_t used = 0;
  Frame f;
  try {
    f = decode_pgm(buf, 0, &used);
  } catch (const Error& e) {
    malformed(e.what(), static_cast<std::int64_t>(entry.offset) + std::max<std::int64_t>(e.offset(), 0));
  }
  if (used != entry.length || f.width != sensor_.width || f.height != sensor_.height)
    malformed("frame disagrees with the index or sensor size", static_cast<std::int64_t>(entry.offset));
  f.t = entry.t;
  return f;
}

std::optional<StreamItem> RecordingReader::next() {
  const bool have_event = peek_event();
  const bool have_frame = next_frame_ < frame_index_.size();
  if (!have_event && !have_frame) return std::nullopt;
  if (have_frame && (!have_event || frame_index_[next_frame_].t <= pending_event_->t)) {
    const FrameEntry& entry = frame_index_[next_frame_];
    if (next_frame_ > 0 && entry.t < frame_index_[next_frame_ - 1].t)
      throw Error(ErrorCode::out_of_order, "frame timestamps decrease", static_cast<std::int64_t>(entry.offset));
    ++next_frame_;
    return StreamItem{load_frame(entry)};
  }
  const Event e = *pending_event_;
  pending_event_.reset();
  return StreamItem{e};
}

}  // namespace evtrack
