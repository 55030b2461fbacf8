use std::fmt::Display;

pub const USAGE: u8 = 1;
pub const INPUT: u8 = 2;
pub const BACKEND: u8 = 3;

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(msg: impl Display) -> Self {
        Failure { code: USAGE, error: anyhow::anyhow!("{msg}") }
    }

    pub fn input(msg: impl Display) -> Self {
        Failure { code: INPUT, error: anyhow::anyhow!("{msg}") }
    }

    pub fn backend(msg: impl Display) -> Self {
        Failure { code: BACKEND, error: anyhow::anyhow!("{msg}") }
    }
}

pub type CliResult<T> = Result<T, Failure>;

/// Attaches an exit code and a context line to any error.
pub trait Classify<T> {
    fn or_exit(self, code: u8, context: impl Display) -> CliResult<T>;

    fn input(self, context: impl Display) -> CliResult<T>
    where
        Self: Sized,
    {
        self.or_exit(INPUT, context)
    }

    fn usage(self, context: impl Display) -> CliResult<T>
    where
        Self: Sized,
    {
        self.or_exit(USAGE, context)
    }
}

impl<T, E> Classify<T> for Result<T, E>
where
    E: Into<anyhow::Error>,
{
    fn or_exit(self, code: u8, context: impl Display) -> CliResult<T> {
        self.map_err(|e| Failure { code, error: e.into().context(context.to_string()) })
    }
}
