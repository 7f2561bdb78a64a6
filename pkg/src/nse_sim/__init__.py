# src/nse_sim package
