//! Hardware components that are metered and a small per-component container.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A metered hardware component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Cpu,
    Ram,
    Gpu,
}

impl Component {
    /// All components in log order.
    pub const ALL: [Component; 3] = [Component::Cpu, Component::Ram, Component::Gpu];

    pub fn as_str(self) -> &'static str {
        match self {
            Component::Cpu => "cpu",
            Component::Ram => "ram",
            Component::Gpu => "gpu",
        }
    }

    /// Whether the component carries a temperature channel.
    pub fn has_temperature(self) -> bool {
        matches!(self, Component::Cpu | Component::Gpu)
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown component `{0}` (expected cpu, ram or gpu)")]
pub struct UnknownComponent(pub String);

impl FromStr for Component {
    type Err = UnknownComponent;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cpu" => Ok(Component::Cpu),
            "ram" => Ok(Component::Ram),
            "gpu" => Ok(Component::Gpu),
            _ => Err(UnknownComponent(s.to_string())),
        }
    }
}

/// One value per component. Serializes as `{"cpu": .., "ram": .., "gpu": ..}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerComponent<T> {
    pub cpu: T,
    pub ram: T,
    pub gpu: T,
}

impl<T> PerComponent<T> {
    pub fn new(cpu: T, ram: T, gpu: T) -> Self {
        PerComponent { cpu, ram, gpu }
    }

    pub fn from_fn(mut f: impl FnMut(Component) -> T) -> Self {
        PerComponent {
            cpu: f(Component::Cpu),
            ram: f(Component::Ram),
            gpu: f(Component::Gpu),
        }
    }

    pub fn get(&self, component: Component) -> &T {
        match component {
            Component::Cpu => &self.cpu,
            Component::Ram => &self.ram,
            Component::Gpu => &self.gpu,
        }
    }

    pub fn get_mut(&mut self, component: Component) -> &mut T {
        match component {
            Component::Cpu => &mut self.cpu,
            Component::Ram => &mut self.ram,
            Component::Gpu => &mut self.gpu,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Component, &T) -> U) -> PerComponent<U> {
        PerComponent::from_fn(|c| f(c, self.get(c)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Component, &T)> {
        Component::ALL.into_iter().map(move |c| (c, self.get(c)))
    }

    /// Fallible per-component construction; the first error wins.
    pub fn try_from_fn<E>(mut f: impl FnMut(Component) -> Result<T, E>) -> Result<Self, E> {
        Ok(PerComponent {
            cpu: f(Component::Cpu)?,
            ram: f(Component::Ram)?,
            gpu: f(Component::Gpu)?,
        })
    }
}
