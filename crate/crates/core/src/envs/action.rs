#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Button {
    Blue,
    Red,
}

impl Button {
    pub fn other(self) -> Button {
        match self {
            Button::Blue => Button::Red,
            Button::Red => Button::Blue,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// An agent output: a gaze displacement in normalized screen units, or a
/// Skinner-box action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Gaze([f64; 2]),
    Press(Button),
    Wait,
}

impl Action {
    /// Gaze move with each component clamped to `[-max_step, max_step]`.
    pub fn gaze_clamped(d: [f64; 2], max_step: f64) -> Action {
        Action::Gaze([d[0].clamp(-max_step, max_step), d[1].clamp(-max_step, max_step)])
    }

    pub fn zero_gaze() -> Action {
        Action::Gaze([0.0, 0.0])
    }

    pub fn dgaze(&self) -> Option<[f64; 2]> {
        match self {
            Action::Gaze(d) => Some(*d),
            _ => None,
        }
    }
}
