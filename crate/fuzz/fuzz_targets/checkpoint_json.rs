#![no_main]

use fl_offload::ddqn::{Checkpoint, DqnHyperparams, QLearner};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(ck) = Checkpoint::from_json(text) else {
        return;
    };
    if let Ok(learner) = QLearner::from_checkpoint(ck, DqnHyperparams::default()) {
        let state = vec![0.0; learner.online.input_dim()];
        let q = learner
            .online
            .forward(&state)
            .expect("checked network runs");
        assert_eq!(q.len(), learner.online.output_dim());
    }
});
