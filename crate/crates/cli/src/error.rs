use serde_json::json;

#[derive(Debug)]
pub enum CliError {
    /// Every violated precondition of the resolved config.
    Config(Vec<String>),
    Runtime(String),
    /// Recipe finished but at least one check failed.
    Acceptance(Vec<String>),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(vec![msg.into()])
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Acceptance(_) => 4,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let (kind, messages) = match self {
            CliError::Config(m) => ("config", m.clone()),
            CliError::Runtime(m) => ("runtime", vec![m.clone()]),
            CliError::Acceptance(m) => ("acceptance", m.clone()),
        };
        json!({ "error": kind, "exit_code": self.exit_code(), "messages": messages })
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {}", m.join("; ")),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
            CliError::Acceptance(m) => write!(f, "failed checks: {}", m.join("; ")),
        }
    }
}

impl std::error::Error for CliError {}

impl From<brownent::Error> for CliError {
    fn from(e: brownent::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
