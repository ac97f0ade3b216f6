use crate::error::{Result, SynthError};

/// Motion programs. Verbs move sprites; they never touch appearance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verb {
    Lift,
    Drop,
    Shake,
    ApproachHand,
    RotateAround,
    SlideBehind,
}

impl Verb {
    pub const ALL: [Verb; 6] = [
        Verb::Lift,
        Verb::Drop,
        Verb::Shake,
        Verb::ApproachHand,
        Verb::RotateAround,
        Verb::SlideBehind,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Verb::Lift => "lift",
            Verb::Drop => "drop",
            Verb::Shake => "shake",
            Verb::ApproachHand => "approach-hand",
            Verb::RotateAround => "rotate-around",
            Verb::SlideBehind => "slide-behind",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Square,
    Circle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Texture {
    Solid,
    Checker,
}

/// Appearance programs. Nouns choose how a sprite looks; they never touch
/// trajectories, so the verb label is recoverable from motion alone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Noun {
    pub shape: Shape,
    pub color: [f64; 3],
    pub color_name: &'static str,
    pub texture: Texture,
}

impl Noun {
    pub fn name(&self) -> String {
        let shape = match self.shape {
            Shape::Square => "square",
            Shape::Circle => "circle",
        };
        let texture = match self.texture {
            Texture::Solid => "solid",
            Texture::Checker => "checker",
        };
        format!("{}-{}-{}", self.color_name, texture, shape)
    }
}

/// The benchmark vocabulary: a 6-way verb classification with nouns as
/// nuisance appearance variation.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    pub verbs: Vec<Verb>,
    pub nouns: Vec<Noun>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        let colors: [([f64; 3], &'static str); 2] =
            [([0.85, 0.15, 0.15], "red"), ([0.15, 0.80, 0.20], "green")];
        let mut nouns = Vec::with_capacity(8);
        for shape in [Shape::Square, Shape::Circle] {
            for (color, color_name) in colors {
                for texture in [Texture::Solid, Texture::Checker] {
                    nouns.push(Noun {
                        shape,
                        color,
                        color_name,
                        texture,
                    });
                }
            }
        }
        Vocabulary {
            verbs: Verb::ALL.to_vec(),
            nouns,
        }
    }
}

impl Vocabulary {
    pub fn num_verbs(&self) -> usize {
        self.verbs.len()
    }

    pub fn num_nouns(&self) -> usize {
        self.nouns.len()
    }

    pub fn verb_index(&self, name: &str) -> Result<usize> {
        self.verbs
            .iter()
            .position(|v| v.name() == name)
            .ok_or_else(|| SynthError::UnknownName {
                kind: "verb",
                name: name.to_string(),
            })
    }

    pub fn noun_index(&self, name: &str) -> Result<usize> {
        self.nouns
            .iter()
            .position(|n| n.name() == name)
            .ok_or_else(|| SynthError::UnknownName {
                kind: "noun",
                name: name.to_string(),
            })
    }
}
