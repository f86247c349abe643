use simplexslice::Error;

/// Exit categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Io,
    Usage,
    Data,
    Numerical,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Io => 1,
            Category::Usage => 2,
            Category::Data => 3,
            Category::Numerical => 4,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        CliError {
            category,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::new(Category::Usage, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError::new(Category::Data, message)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let category = match &e {
            Error::DimensionMismatch { .. }
            | Error::InvalidInput(_)
            | Error::Unsupported(_)
            | Error::ContractViolation(_) => Category::Usage,
            Error::SingularSimplex(_)
            | Error::NotSpd(_)
            | Error::DegenerateInput(_)
            | Error::Infeasible(_)
            | Error::Data(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => Category::Data,
            Error::NumericalFailure(_) => Category::Numerical,
        };
        CliError::new(category, e.to_string())
    }
}

/// Errors raised while reading an input file are data errors whatever their kind.
pub fn input_error(path: &std::path::Path, e: impl std::fmt::Display) -> CliError {
    CliError::data(format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories_map_to_exit_codes() {
        let cases = [
            (Error::Unsupported("x".into()), 2),
            (Error::InvalidInput("x".into()), 2),
            (Error::Data("x".into()), 3),
            (Error::SingularSimplex(0.0), 3),
            (Error::NumericalFailure("x".into()), 4),
        ];
        for (e, code) in cases {
            assert_eq!(CliError::from(e).category.exit_code(), code);
        }
    }
}
