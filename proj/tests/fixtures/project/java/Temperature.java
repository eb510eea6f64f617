package demo;

public class Temperature {
    private static final double FREEZING = 32.0;
    private static final double RATIO = 1.8;
    private final double celsius;

    public Temperature(double celsius) {
        this.celsius = celsius;
    }

    public double toFahrenheit() {
        return celsius * RATIO + FREEZING;
    }

    public boolean isFreezing() {
        return toFahrenheit() <= FREEZING;
    }
}
