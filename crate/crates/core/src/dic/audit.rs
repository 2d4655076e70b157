use super::Shape;
use crate::bitcore::Mask64;

/// A shape change. `from == None` means the itemset was just created.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub mask: Mask64,
    pub from: Option<Shape>,
    pub to: Shape,
}

impl Transition {
    pub fn is_legal(&self) -> bool {
        match self.from {
            None => self.to == Shape::DashedCircle,
            Some(from) => from.can_transition_to(self.to),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransitionLog {
    pub events: Vec<Transition>,
}

impl TransitionLog {
    pub fn illegal(&self) -> impl Iterator<Item = &Transition> {
        self.events.iter().filter(|t| !t.is_legal())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Optional transition recorder threaded through the stop steps.
#[derive(Debug, Default)]
pub(crate) struct Recorder(Option<TransitionLog>);

impl Recorder {
    pub(crate) fn new(enabled: bool) -> Self {
        Recorder(enabled.then(TransitionLog::default))
    }

    pub(crate) fn disabled() -> Self {
        Recorder(None)
    }

    pub(crate) fn record(&mut self, mask: Mask64, from: Option<Shape>, to: Shape) {
        if let Some(log) = &mut self.0 {
            log.events.push(Transition { mask, from, to });
        }
    }

    pub(crate) fn into_log(self) -> Option<TransitionLog> {
        self.0
    }
}
