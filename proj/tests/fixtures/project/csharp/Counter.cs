namespace Demo
{
    public class Counter
    {
        private static readonly int Start = 0;
        private static readonly int Step = 1;
        private int count;

        public Counter()
        {
            count = Start;
        }

        public void Increment()
        {
            count = count + Step;
        }

        public int Get()
        {
            return count;
        }

        public void Reset()
        {
            count = Start;
        }
    }
}
