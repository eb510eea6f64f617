package demo;

public class Matrix {
    private static final int SIZE = 3;
    private final double[] cells;

    public Matrix() {
        cells = new double[SIZE * SIZE];
    }

    public double get(int row, int col) {
        return cells[row * SIZE + col];
    }

    public void set(int row, int col, double value) {
        cells[row * SIZE + col] = value;
    }

    public double trace() {
        double sum = 0.0;
        for (int i = 0; i < SIZE; i++) {
            sum = sum + get(i, i);
        }
        return sum;
    }
}
