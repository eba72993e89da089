#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tnvault {

// Frame: "TNW1", u8 type, u64 LE payload length, payload.
inline constexpr char kWireMagic[4] = {'T', 'N', 'W', '1'};
inline constexpr std::size_t kWireHeaderSize = 13;

enum class MessageType : std::uint8_t {
  kTensorBlob = 0,  // payload is ".dt" bytes
  kOpRequest = 1,   // payload is JSON
  kOpDone = 2,      // payload is JSON
  kError = 3,       // payload is JSON {code, message}
};

std::string_view message_type_name(MessageType t);

struct WireMessage {
  MessageType type = MessageType::kOpRequest;
  std::vector<std::uint8_t> payload;

  static WireMessage json_message(MessageType type, const std::string& text);
  std::string text() const;

  bool operator==(const WireMessage&) const = default;
};

std::vector<std::uint8_t> encode_message(const WireMessage& m);
/// Parses exactly one frame; throws ProtocolViolation on a bad magic, an
/// unknown type or a length that does not match.
WireMessage decode_message(std::span<const std::uint8_t> frame);

struct WireHeader {
  MessageType type;
  std::uint64_t payload_len;
};
WireHeader decode_header(std::span<const std::uint8_t, kWireHeaderSize> header);

}  // namespace tnvault
