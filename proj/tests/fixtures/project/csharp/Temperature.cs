namespace Demo
{
    public class Temperature
    {
        private static readonly double Freezing = 32.0;
        private static readonly double Ratio = 1.8;
        private readonly double celsius;

        public Temperature(double celsius)
        {
            this.celsius = celsius;
        }

        public double ToFahrenheit()
        {
            return celsius * Ratio + Freezing;
        }

        public bool IsFreezing()
        {
            return ToFahrenheit() <= Freezing;
        }
    }
}
