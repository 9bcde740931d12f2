"""One service class per diagnostic stage, wired together through constructors."""
