#include "loop/util/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <stdexcept>

namespace loop::util {

namespace {

void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
}

std::runtime_error sys_error(const std::string& what) {
    return std::runtime_error(what + ": " + std::strerror(errno));
}

}  // namespace

ProcessResult run_shell(const std::string& command, const std::string& input, std::optional<double> timeout_seconds) {
    int in_pipe[2], out_pipe[2], err_pipe[2];
    if (::pipe(in_pipe) != 0) throw sys_error("pipe");
    if (::pipe(out_pipe) != 0) throw sys_error("pipe");
    if (::pipe(err_pipe) != 0) throw sys_error("pipe");

    pid_t pid = ::fork();
    if (pid < 0) throw sys_error("fork");
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) ::close(fd);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::setpgid(pid, pid);

    int to_child = in_pipe[1], from_out = out_pipe[0], from_err = err_pipe[0];
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    ::fcntl(to_child, F_SETFL, O_NONBLOCK);
    ::signal(SIGPIPE, SIG_IGN);
    if (input.empty()) close_fd(to_child);

    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    ProcessResult result;
    std::size_t written = 0;
    char buf[8192];

    while (from_out >= 0 || from_err >= 0) {
        int wait_ms = -1;
        if (timeout_seconds) {
            double left = *timeout_seconds - std::chrono::duration<double>(Clock::now() - start).count();
            if (left <= 0) {
                result.timed_out = true;
                ::kill(-pid, SIGKILL);
                break;
            }
            wait_ms = static_cast<int>(left * 1000.0) + 1;
        }
        pollfd fds[3];
        int n = 0;
        int out_slot = -1, err_slot = -1, in_slot = -1;
        if (from_out >= 0) { fds[n] = {from_out, POLLIN, 0}; out_slot = n++; }
        if (from_err >= 0) { fds[n] = {from_err, POLLIN, 0}; err_slot = n++; }
        if (to_child >= 0) { fds[n] = {to_child, POLLOUT, 0}; in_slot = n++; }
        int rc = ::poll(fds, static_cast<nfds_t>(n), wait_ms);
        if (rc < 0) {
            if (errno == EINTR) continue;
            ::kill(-pid, SIGKILL);
            throw sys_error("poll");
        }
        auto drain = [&](int slot, int& fd, std::string& sink) {
            if (slot < 0 || !(fds[slot].revents & (POLLIN | POLLHUP | POLLERR))) return;
            ssize_t got = ::read(fd, buf, sizeof buf);
            if (got > 0) sink.append(buf, static_cast<std::size_t>(got));
            else if (got == 0 || errno != EINTR) close_fd(fd);
        };
        drain(out_slot, from_out, result.out);
        drain(err_slot, from_err, result.err);
        if (in_slot >= 0 && fds[in_slot].revents) {
            if (fds[in_slot].revents & POLLOUT) {
                ssize_t put = ::write(to_child, input.data() + written, input.size() - written);
                if (put > 0) written += static_cast<std::size_t>(put);
                else if (errno != EAGAIN && errno != EINTR) close_fd(to_child);
            } else {
                close_fd(to_child);
            }
            if (written >= input.size()) close_fd(to_child);
        }
    }
    close_fd(to_child);
    close_fd(from_out);
    close_fd(from_err);

    int status = 0;
    for (;;) {
        pid_t done = ::waitpid(pid, &status, timeout_seconds && !result.timed_out ? WNOHANG : 0);
        if (done == pid) break;
        if (done < 0 && errno != EINTR) break;
        if (done == 0) {
            if (std::chrono::duration<double>(Clock::now() - start).count() >= *timeout_seconds) {
                result.timed_out = true;
                ::kill(-pid, SIGKILL);
            } else {
                ::usleep(2000);
            }
        }
    }
    if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    return result;
}

std::string shell_quote(const std::string& arg) {
    std::string out = "'";
    for (char c : arg) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

std::optional<std::string> find_executable(const std::string& program) {
    if (program.empty()) return std::nullopt;
    auto usable = [](const std::string& p) {
        struct stat st {};
        return ::stat(p.c_str(), &st) == 0 && S_ISREG(st.st_mode) && ::access(p.c_str(), X_OK) == 0;
    };
    if (program.find('/') != std::string::npos) {
        if (usable(program)) return program;
        return std::nullopt;
    }
    const char* path = std::getenv("PATH");
    std::stringstream dirs(path ? path : "/usr/bin:/bin");
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
        if (dir.empty()) dir = ".";
        std::string candidate = (std::filesystem::path(dir) / program).string();
        if (usable(candidate)) return candidate;
    }
    return std::nullopt;
}

std::string command_program(const std::string& command) {
    std::string word;
    std::size_t i = 0;
    while (i < command.size() && std::isspace(static_cast<unsigned char>(command[i]))) ++i;
    char quote = 0;
    for (; i < command.size(); ++i) {
        char c = command[i];
        if (quote) {
            if (c == quote) quote = 0;
            else word += c;
        } else if (c == '\'' || c == '"') {
            quote = c;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            break;
        } else {
            word += c;
        }
    }
    return word;
}

}  // namespace loop::util
