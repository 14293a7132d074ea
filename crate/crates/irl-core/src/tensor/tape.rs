use std::cell::RefCell;

/// Recorded backward rules, replayed in reverse order by [`super::backward`].
///
/// Ops are pushed in forward execution order, so inputs of any op were
/// produced strictly earlier. An op is only recorded when its output needs a
/// gradient; forward through frozen branches records nothing.
#[derive(Default)]
pub struct Tape {
    ops: RefCell<Vec<Box<dyn Fn()>>>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.ops.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.borrow().is_empty()
    }

    pub(crate) fn record(&self, backward_rule: impl Fn() + 'static) {
        self.ops.borrow_mut().push(Box::new(backward_rule));
    }

    pub(crate) fn replay_reverse(&self) {
        let ops = self.ops.borrow();
        for op in ops.iter().rev() {
            op();
        }
    }
}
