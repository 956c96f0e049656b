#pragma once

#include <mutex>
#include <shared_mutex>

namespace loop::util {

/// Shared mutex where a waiting writer blocks new readers. Satisfies the
/// SharedMutex requirements used by std::shared_lock and std::unique_lock.
class FairSharedMutex {
public:
    void lock() {
        gate_.lock();
        rw_.lock();
        gate_.unlock();
    }
    void unlock() { rw_.unlock(); }
    void lock_shared() {
        std::lock_guard g(gate_);
        rw_.lock_shared();
    }
    void unlock_shared() { rw_.unlock_shared(); }

private:
    std::mutex gate_;
    std::shared_mutex rw_;
};

}  // namespace loop::util
