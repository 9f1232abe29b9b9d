#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "biphoton/montecarlo.hpp"

namespace biphoton {

namespace {

constexpr std::array<char, 4> magic{'B', 'P', 'E', 'V'};
constexpr std::uint16_t format_version = 1;
constexpr std::uint16_t payload_size = 19;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T)))
    throw std::runtime_error("truncated binary event file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

Outcome parse_outcome(const std::string& text) {
  if (text == "pass") return Outcome::Pass;
  if (text == "reject") return Outcome::Reject;
  throw std::invalid_argument("unknown outcome '" + text + "'");
}

Origin parse_origin(const std::string& text) {
  if (text == "pair") return Origin::Pair;
  if (text == "accidental") return Origin::Accidental;
  throw std::invalid_argument("unknown origin '" + text + "'");
}

}  // namespace

void write_events_csv(std::ostream& out, const EventStream& stream) {
  out << "arm,time_ns,outcome,origin\n" << std::setprecision(17);
  for (const auto& e : stream.events)
    out << e.arm << ',' << e.time << ',' << (e.outcome == Outcome::Pass ? "pass" : "reject") << ','
        << (e.origin == Origin::Pair ? "pair" : "accidental") << '\n';
}

// The CSV carries neither ids nor the run duration; ids are numbered by row
// and the duration is taken as the last click time.
EventStream read_events_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("arm,time_ns,outcome,origin", 0) != 0)
    throw std::invalid_argument("event CSV must start with the arm,time_ns,outcome,origin header");
  EventStream stream;
  std::uint64_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream fields(line);
    std::string arm, time, outcome, origin;
    if (!std::getline(fields, arm, ',') || !std::getline(fields, time, ',') ||
        !std::getline(fields, outcome, ',') || !std::getline(fields, origin))
      throw std::invalid_argument("malformed event CSV row " + std::to_string(row + 1));
    DetectionEvent e{std::stoi(arm), std::stod(time), parse_outcome(outcome), parse_origin(origin), row++};
    if (e.arm != 1 && e.arm != 2) throw std::invalid_argument("event arm must be 1 or 2");
    stream.duration = std::max(stream.duration, e.time);
    stream.events.push_back(e);
  }
  return stream;
}

void write_events_binary(std::ostream& out, const EventStream& stream) {
  out.write(magic.data(), magic.size());
  put(out, format_version);
  put(out, stream.duration);
  put(out, static_cast<std::uint64_t>(stream.events.size()));
  for (const auto& e : stream.events) {
    put(out, payload_size);
    put(out, static_cast<std::uint8_t>(e.arm));
    put(out, static_cast<std::uint8_t>(e.outcome));
    put(out, static_cast<std::uint8_t>(e.origin));
    put(out, e.time);
    put(out, e.id);
  }
}

EventStream read_events_binary(std::istream& in) {
  std::array<char, 4> header{};
  if (!in.read(header.data(), header.size()) || header != magic)
    throw std::runtime_error("not a binary event file (bad magic)");
  if (const auto version = get<std::uint16_t>(in); version != format_version)
    throw std::runtime_error("unsupported binary event version " + std::to_string(version));
  EventStream stream;
  stream.duration = get<double>(in);
  const auto count = get<std::uint64_t>(in);
  stream.events.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto length = get<std::uint16_t>(in);
    if (length != payload_size)
      throw std::runtime_error("unexpected event record length " + std::to_string(length));
    DetectionEvent e;
    e.arm = get<std::uint8_t>(in);
    const auto outcome = get<std::uint8_t>(in);
    const auto origin = get<std::uint8_t>(in);
    if ((e.arm != 1 && e.arm != 2) || outcome > 1 || origin > 1)
      throw std::runtime_error("corrupt event record " + std::to_string(i));
    e.outcome = static_cast<Outcome>(outcome);
    e.origin = static_cast<Origin>(origin);
    e.time = get<double>(in);
    e.id = get<std::uint64_t>(in);
    stream.events.push_back(e);
  }
  return stream;
}

}  // namespace biphoton
