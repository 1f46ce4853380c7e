# Integration tests for dapd-sco-sim
