#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(graph) = torusboot::parse(text) {
            // accepted input must survive a serialize/parse round trip
            let canonical = graph.serialize();
            let reparsed = torusboot::parse(&canonical).expect("canonical form must parse");
            assert_eq!(graph, reparsed);
            assert_eq!(canonical, reparsed.serialize());
        }
    }
});
