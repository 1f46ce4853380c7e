# Unit tests for dapd-sco-sim
