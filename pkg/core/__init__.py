# Core App - shared exceptions and system-wide utilities
