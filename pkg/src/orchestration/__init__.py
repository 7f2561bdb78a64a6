# src/orchestration package 