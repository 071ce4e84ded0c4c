/*
 * Copyright 2026 The Polystore Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "polystore/service/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

namespace polystore {

namespace {

bool write_all(int fd, const std::string& data) {
    size_t sent = 0;
    while (sent < data.size()) {
        ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        sent += static_cast<size_t>(n);
    }
    return true;
}

void session_loop(ServiceRuntime* runtime, int fd) {
    std::string buffer;
    char chunk[4096];
    for (;;) {
        ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<size_t>(n));
        size_t newline;
        while ((newline = buffer.find('\n')) != std::string::npos) {
            std::string line = buffer.substr(0, newline);
            buffer.erase(0, newline + 1);
            if (line.empty()) continue;
            json response = runtime->handle_line(line);
            if (!write_all(fd, response.dump() + "\n")) {
                ::close(fd);
                return;
            }
        }
    }
    ::close(fd);
}

Result<int> connect_to(const std::string& host, uint16_t port) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) return Result<int>(ErrorCode::IoError, std::strerror(errno));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        return Result<int>(ErrorCode::IoError, "bad address " + host);
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        int err = errno;
        ::close(fd);
        return Result<int>(ErrorCode::IoError,
                           host + ":" + std::to_string(port) + ": " + std::strerror(err));
    }
    return fd;
}

}  // namespace

Status serve(ServiceRuntime& runtime, const std::string& host, uint16_t port,
             std::atomic<bool>& stop) {
    int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) return Status::error(ErrorCode::IoError, std::strerror(errno));
    int one = 1;
    ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (host == "0.0.0.0") addr.sin_addr.s_addr = INADDR_ANY;
    else if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(listener);
        return Status::error(ErrorCode::ConfigError, "bad listen address " + host);
    }
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        int err = errno;
        ::close(listener);
        return Status::error(ErrorCode::IoError, "bind: " + std::string(std::strerror(err)));
    }
    if (::listen(listener, 64) != 0) {
        int err = errno;
        ::close(listener);
        return Status::error(ErrorCode::IoError, "listen: " + std::string(std::strerror(err)));
    }

    timeval tv{0, 200000};  // wake periodically to observe `stop`
    ::setsockopt(listener, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);

    std::vector<std::thread> sessions;
    while (!stop.load()) {
        int fd = ::accept(listener, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
            break;
        }
        sessions.emplace_back(session_loop, &runtime, fd);
    }
    ::close(listener);
    for (auto& t : sessions)
        if (t.joinable()) t.join();
    return Status::ok();
}

Result<std::vector<std::string>> client_send(const std::string& host, uint16_t port,
                                             const std::vector<std::string>& lines) {
    auto fd = connect_to(host, port);
    if (!fd) return fd.status();

    std::vector<std::string> responses;
    std::string buffer;
    char chunk[4096];
    for (const auto& line : lines) {
        if (!write_all(fd.value(), line + "\n")) {
            ::close(fd.value());
            return Result<std::vector<std::string>>(ErrorCode::IoError, "send failed");
        }
        // One response per request, in order.
        for (;;) {
            size_t newline = buffer.find('\n');
            if (newline != std::string::npos) {
                responses.push_back(buffer.substr(0, newline));
                buffer.erase(0, newline + 1);
                break;
            }
            ssize_t n = ::recv(fd.value(), chunk, sizeof chunk, 0);
            if (n <= 0) {
                ::close(fd.value());
                return Result<std::vector<std::string>>(ErrorCode::IoError, "connection closed");
            }
            buffer.append(chunk, static_cast<size_t>(n));
        }
    }
    ::close(fd.value());
    return responses;
}

}  // namespace polystore
