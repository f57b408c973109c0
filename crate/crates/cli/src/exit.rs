use std::process::ExitCode;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    /// Nothing usable was produced.
    Failure = 1,
    /// Some inputs of a batch failed; the rest were written.
    Partial = 2,
    /// A chain stopped because its attention provider gave out.
    ProviderExhausted = 3,
}

impl Status {
    /// Status of a batch given its size and how many items failed.
    pub fn for_batch(total: usize, failed: usize) -> Status {
        if failed == 0 {
            Status::Success
        } else if failed < total {
            Status::Partial
        } else {
            Status::Failure
        }
    }
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> ExitCode {
        ExitCode::from(s as u8)
    }
}
