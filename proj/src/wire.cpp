#include "tnvault/wire.hpp"

#include <algorithm>
#include <cstring>

#include "tnvault/errors.hpp"

namespace tnvault {

std::string_view message_type_name(MessageType t) {
  switch (t) {
    case MessageType::kTensorBlob: return "TensorBlob";
    case MessageType::kOpRequest: return "OpRequest";
    case MessageType::kOpDone: return "OpDone";
    case MessageType::kError: return "Error";
  }
  return "?";
}

WireMessage WireMessage::json_message(MessageType type,
                                      const std::string& text) {
  return WireMessage{type, std::vector<std::uint8_t>(text.begin(), text.end())};
}

std::string WireMessage::text() const {
  return std::string(payload.begin(), payload.end());
}

std::vector<std::uint8_t> encode_message(const WireMessage& m) {
  std::vector<std::uint8_t> out(kWireHeaderSize + m.payload.size());
  std::memcpy(out.data(), kWireMagic, 4);
  out[4] = static_cast<std::uint8_t>(m.type);
  const auto len = static_cast<std::uint64_t>(m.payload.size());
  for (std::size_t b = 0; b < 8; ++b) {
    out[5 + b] = static_cast<std::uint8_t>(len >> (8 * b));
  }
  std::copy(m.payload.begin(), m.payload.end(), out.begin() + kWireHeaderSize);
  return out;
}

WireHeader decode_header(std::span<const std::uint8_t, kWireHeaderSize> h) {
  require(std::memcmp(h.data(), kWireMagic, 4) == 0,
          ErrorCode::kProtocolViolation, "frame does not start with TNW1");
  require(h[4] <= 3, ErrorCode::kProtocolViolation,
          "unknown message type " + std::to_string(h[4]));
  std::uint64_t len = 0;
  for (std::size_t b = 0; b < 8; ++b) {
    len |= static_cast<std::uint64_t>(h[5 + b]) << (8 * b);
  }
  return {static_cast<MessageType>(h[4]), len};
}

WireMessage decode_message(std::span<const std::uint8_t> frame) {
  require(frame.size() >= kWireHeaderSize, ErrorCode::kProtocolViolation,
          "frame shorter than its header");
  const WireHeader h =
      decode_header(frame.first<kWireHeaderSize>());
  require(h.payload_len == frame.size() - kWireHeaderSize,
          ErrorCode::kProtocolViolation,
          "payload length " + std::to_string(h.payload_len) + " but " +
              std::to_string(frame.size() - kWireHeaderSize) + " bytes follow");
  return WireMessage{h.type, std::vector<std::uint8_t>(
                                 frame.begin() + kWireHeaderSize, frame.end())};
}

}  // namespace tnvault
