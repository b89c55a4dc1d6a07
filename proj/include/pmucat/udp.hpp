#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmucat {

/// Parse "host:port" into a sockaddr. Numeric addresses and hostnames both work.
inline sockaddr_in resolve_endpoint(const std::string& endpoint) {
    const auto colon = endpoint.rfind(':');
    if (colon == std::string::npos) throw std::invalid_argument("endpoint must be host:port");
    const std::string host = endpoint.substr(0, colon);
    const std::string port = endpoint.substr(colon + 1);

    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_DGRAM;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr)
        throw std::runtime_error("cannot resolve " + endpoint);
    sockaddr_in addr{};
    std::memcpy(&addr, res->ai_addr, sizeof(addr));
    freeaddrinfo(res);
    return addr;
}

/// Minimal RAII UDP socket.
class UdpSocket {
public:
    UdpSocket() : fd_(::socket(AF_INET, SOCK_DGRAM, 0)) {
        if (fd_ < 0) throw std::runtime_error("cannot create UDP socket");
    }
    ~UdpSocket() {
        if (fd_ >= 0) ::close(fd_);
    }
    UdpSocket(const UdpSocket&) = delete;
    UdpSocket& operator=(const UdpSocket&) = delete;
    UdpSocket(UdpSocket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

    void bind(const std::string& endpoint) {
        const sockaddr_in addr = resolve_endpoint(endpoint);
        if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0)
            throw std::runtime_error("cannot bind " + endpoint);
    }

    /// Receive timeout so serve loops can poll their stop flag.
    void set_receive_timeout_ms(int ms) {
        timeval tv{};
        tv.tv_sec = ms / 1000;
        tv.tv_usec = (ms % 1000) * 1000;
        ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    }

    void send_to(std::span<const std::uint8_t> payload, const sockaddr_in& dest) {
        const auto sent = ::sendto(fd_, payload.data(), payload.size(), 0,
                                   reinterpret_cast<const sockaddr*>(&dest), sizeof(dest));
        if (sent < 0 || static_cast<std::size_t>(sent) != payload.size())
            throw std::runtime_error("UDP send failed");
    }

    /// Blocking receive; returns an empty vector on timeout.
    std::vector<std::uint8_t> receive() {
        std::vector<std::uint8_t> buf(2048);
        const auto got = ::recvfrom(fd_, buf.data(), buf.size(), 0, nullptr, nullptr);
        if (got < 0) return {};
        buf.resize(static_cast<std::size_t>(got));
        return buf;
    }

    std::uint16_t bound_port() const {
        sockaddr_in addr{};
        socklen_t len = sizeof(addr);
        ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        return ntohs(addr.sin_port);
    }

private:
    int fd_;
};

}  // namespace pmucat
