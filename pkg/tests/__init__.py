# Test package for dapd-sco-sim
