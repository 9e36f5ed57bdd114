// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

// Scorer wire protocol, version 1.
//
// A frame is one JSON header line terminated by '\n', followed by exactly
// header["payload_bytes"] bytes of little-endian float32 data. Image and
// gradient payloads are H*W*3 values, row-major, RGB interleaved.
//
// On connect the service sends a handshake frame:
//   {"version":1,"type":"handshake","model":...,"input_size":...,"temperature":...,"payload_bytes":0}
// Request (engine -> service):
//   {"version":1,"type":"score","id":N,"height":H,"width":W,"positive":"...",
//    "negatives":[...],"payload_bytes":12*H*W,"context":{...}}
// Response (service -> engine):
//   {"version":1,"type":"result","id":N,"height":H,"width":W,"loss":x,
//    "payload_bytes":12*H*W[,"logits":[...]]}
// or an error frame:
//   {"version":1,"type":"error","id":N,"message":"...","payload_bytes":0}

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfopt/common.hpp"

namespace tfopt {

inline constexpr int kProtocolVersion = 1;

/// Byte stream with line and exact-length reads. Throws ProtocolError on
/// transport failure or EOF.
class Stream {
 public:
  virtual ~Stream() = default;
  virtual std::string read_line() = 0;
  virtual void read_exact(void* buffer, std::size_t bytes) = 0;
  virtual void write_all(const void* buffer, std::size_t bytes) = 0;
  // True once the peer has closed and no buffered bytes remain.
  virtual bool at_end() = 0;
};

/// Stream over a pair of file descriptors (a socket uses the same fd twice).
class FdStream : public Stream {
 public:
  FdStream(int read_fd, int write_fd, int child_pid = -1);
  ~FdStream() override;
  FdStream(const FdStream&) = delete;
  FdStream& operator=(const FdStream&) = delete;

  std::string read_line() override;
  void read_exact(void* buffer, std::size_t bytes) override;
  void write_all(const void* buffer, std::size_t bytes) override;
  bool at_end() override;

 private:
  bool fill();

  int read_fd_;
  int write_fd_;
  int child_pid_;
  std::vector<char> buffer_;
  std::size_t begin_ = 0;
};

std::unique_ptr<Stream> connect_tcp(const std::string& host, int port);

/// Runs `/bin/sh -c command` and talks to it over its stdin/stdout.
std::unique_ptr<Stream> spawn_process(const std::string& command);

/// "tcp://host:port" or "exec:<shell command>".
std::unique_ptr<Stream> open_endpoint(const std::string& endpoint);

/// Loopback TCP listener, used by mock services and tests.
class TcpListener {
 public:
  explicit TcpListener(int port = 0);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  int port() const { return port_; }
  std::unique_ptr<Stream> accept();

 private:
  int fd_ = -1;
  int port_ = 0;
};

struct Frame {
  nlohmann::json header;
  std::vector<float> payload;
};

/// Serializes a frame; sets header["payload_bytes"] from the payload.
std::string encode_frame(const Frame& frame);
void write_frame(Stream& stream, const Frame& frame);
Frame read_frame(Stream& stream);

std::vector<float> encode_floats(std::span<const double> values);
std::vector<double> decode_floats(std::span<const float> values);

/// Little-endian float32 byte packing.
std::string pack_float32(std::span<const float> values);
std::vector<float> unpack_float32(std::string_view bytes);

}  // namespace tfopt
