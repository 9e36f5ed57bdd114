// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#include "tfopt/protocol.hpp"

#include <algorithm>
#include <bit>
#include <cerrno>
#include <csignal>
#include <cstring>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

namespace tfopt {

namespace {

constexpr std::size_t kReadChunk = 1 << 16;
constexpr std::size_t kMaxHeaderBytes = 1 << 24;

void ignore_sigpipe()
{
  static const bool once = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

std::string errno_message(const std::string& what)
{
  return what + ": " + std::strerror(errno);
}

}  // namespace

FdStream::FdStream(int read_fd, int write_fd, int child_pid)
    : read_fd_(read_fd), write_fd_(write_fd), child_pid_(child_pid)
{
  ignore_sigpipe();
}

FdStream::~FdStream()
{
  if (write_fd_ >= 0 && write_fd_ != read_fd_)
    ::close(write_fd_);
  if (read_fd_ >= 0)
    ::close(read_fd_);
  if (child_pid_ > 0) {
    int status = 0;
    ::waitpid(child_pid_, &status, 0);
  }
}

bool FdStream::fill()
{
  if (begin_ > 0) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<long>(begin_));
    begin_ = 0;
  }
  const std::size_t old = buffer_.size();
  buffer_.resize(old + kReadChunk);
  ssize_t got = 0;
  do {
    got = ::read(read_fd_, buffer_.data() + old, kReadChunk);
  } while (got < 0 && errno == EINTR);
  if (got < 0) {
    buffer_.resize(old);
    throw ProtocolError(errno_message("read failed"));
  }
  buffer_.resize(old + static_cast<std::size_t>(got));
  return got > 0;
}

std::string FdStream::read_line()
{
  for (;;) {
    auto start = buffer_.begin() + static_cast<long>(begin_);
    auto nl = std::find(start, buffer_.end(), '\n');
    if (nl != buffer_.end()) {
      std::string line(start, nl);
      begin_ = static_cast<std::size_t>(nl - buffer_.begin()) + 1;
      return line;
    }
    if (buffer_.size() - begin_ > kMaxHeaderBytes)
      throw ProtocolError("header line exceeds size limit");
    if (!fill())
      throw ProtocolError("connection closed while reading a header");
  }
}

bool FdStream::at_end()
{
  return begin_ == buffer_.size() && !fill();
}

void FdStream::read_exact(void* out, std::size_t bytes)
{
  auto* dst = static_cast<char*>(out);
  while (bytes > 0) {
    if (begin_ == buffer_.size() && !fill())
      throw ProtocolError("connection closed while reading a payload");
    const std::size_t take = std::min(bytes, buffer_.size() - begin_);
    std::memcpy(dst, buffer_.data() + begin_, take);
    begin_ += take;
    dst += take;
    bytes -= take;
  }
}

void FdStream::write_all(const void* data, std::size_t bytes)
{
  const auto* src = static_cast<const char*>(data);
  while (bytes > 0) {
    const ssize_t put = ::write(write_fd_, src, bytes);
    if (put < 0) {
      if (errno == EINTR)
        continue;
      throw ProtocolError(errno_message("write failed"));
    }
    src += put;
    bytes -= static_cast<std::size_t>(put);
  }
}

std::unique_ptr<Stream> connect_tcp(const std::string& host, int port)
{
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found); rc != 0)
    throw ProtocolError("cannot resolve " + host + ": " + gai_strerror(rc));
  int fd = -1;
  for (addrinfo* a = found; a != nullptr; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0)
      continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0)
      break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0)
    throw ProtocolError("cannot connect to " + host + ":" + service);
  return std::make_unique<FdStream>(fd, fd);
}

std::unique_ptr<Stream> spawn_process(const std::string& command)
{
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0)
    throw ProtocolError(errno_message("pipe failed"));
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw ProtocolError(errno_message("pipe failed"));
  }
  const pid_t pid = ::fork();
  if (pid < 0)
    throw ProtocolError(errno_message("fork failed"));
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<FdStream>(from_child[0], to_child[1], pid);
}

std::unique_ptr<Stream> open_endpoint(const std::string& endpoint)
{
  constexpr std::string_view kTcp = "tcp://";
  constexpr std::string_view kExec = "exec:";
  if (endpoint.starts_with(kTcp)) {
    const std::string rest = endpoint.substr(kTcp.size());
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos)
      throw ValidationError("scorer.endpoint", "expected tcp://host:port");
    int port = 0;
    try {
      port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw ValidationError("scorer.endpoint", "invalid port in '" + endpoint + "'");
    }
    return connect_tcp(rest.substr(0, colon), port);
  }
  if (endpoint.starts_with(kExec)) {
    if (endpoint.size() == kExec.size())
      throw ValidationError("scorer.endpoint", "exec: needs a command");
    return spawn_process(endpoint.substr(kExec.size()));
  }
  throw ValidationError("scorer.endpoint", "unsupported endpoint '" + endpoint
                                               + "' (use tcp://host:port or exec:<command>)");
}

TcpListener::TcpListener(int port)
{
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0)
    throw ProtocolError(errno_message("socket failed"));
  int yes = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0
      || ::listen(fd_, 4) != 0) {
    ::close(fd_);
    throw ProtocolError(errno_message("bind/listen failed"));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener()
{
  if (fd_ >= 0)
    ::close(fd_);
}

std::unique_ptr<Stream> TcpListener::accept()
{
  int client = -1;
  do {
    client = ::accept(fd_, nullptr, nullptr);
  } while (client < 0 && errno == EINTR);
  if (client < 0)
    throw ProtocolError(errno_message("accept failed"));
  return std::make_unique<FdStream>(client, client);
}

std::string pack_float32(std::span<const float> values)
{
  std::string bytes(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto word = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b)
      bytes[4 * i + b] = static_cast<char>((word >> (8 * b)) & 0xffu);
  }
  return bytes;
}

std::vector<float> unpack_float32(std::string_view bytes)
{
  if (bytes.size() % 4 != 0)
    throw ProtocolError("payload length is not a multiple of 4");
  std::vector<float> values(bytes.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t word = 0;
    for (int b = 0; b < 4; ++b)
      word |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + b])) << (8 * b);
    values[i] = std::bit_cast<float>(word);
  }
  return values;
}

std::vector<float> encode_floats(std::span<const double> values)
{
  std::vector<float> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [](double v) { return static_cast<float>(v); });
  return out;
}

std::vector<double> decode_floats(std::span<const float> values)
{
  return {values.begin(), values.end()};
}

std::string encode_frame(const Frame& frame)
{
  nlohmann::json header = frame.header;
  header["payload_bytes"] = frame.payload.size() * 4;
  std::string out = header.dump();
  out.push_back('\n');
  out += pack_float32(frame.payload);
  return out;
}

void write_frame(Stream& stream, const Frame& frame)
{
  const std::string bytes = encode_frame(frame);
  stream.write_all(bytes.data(), bytes.size());
}

Frame read_frame(Stream& stream)
{
  const std::string line = stream.read_line();
  Frame frame;
  try {
    frame.header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed frame header: ") + e.what());
  }
  if (!frame.header.is_object())
    throw ProtocolError("frame header is not a JSON object");
  const auto it = frame.header.find("payload_bytes");
  if (it == frame.header.end() || !it->is_number_unsigned())
    throw ProtocolError("frame header lacks an unsigned payload_bytes field");
  const auto bytes = it->get<std::size_t>();
  if (bytes % 4 != 0)
    throw ProtocolError("payload_bytes is not a multiple of 4");
  std::string payload(bytes, '\0');
  stream.read_exact(payload.data(), bytes);
  frame.payload = unpack_float32(payload);
  return frame;
}

}  // namespace tfopt
