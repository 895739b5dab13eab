# E2E Tests Package
